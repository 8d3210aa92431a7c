"""Compare numba and numpy kernels on a realistic mesh.

Usage: python benchmarks/bench_kernels.py [--family square_maze --param 7 --repeat 5]

Both variants are called directly so one process can time them side by side.
Results agree to rounding; the script checks that before printing timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mazecap import geometry, kernels
from mazecap.fem import _dof_layout
from mazecap.mesh import build_mesh, refine_uniform

PAIRS = {
    "p1_stiffness": (kernels._p1_stiffness_jit, kernels._p1_stiffness_np),
    "p2_stiffness": (kernels._p2_stiffness_jit, kernels._p2_stiffness_np),
    "p2_min_jacobian": (kernels._p2_min_jacobian_jit, kernels._p2_min_jacobian_np),
    "p2_energy": (kernels._p2_energy_jit, kernels._p2_energy_np),
    "distance": (geometry._distance_kernel, geometry._distance_numpy),
}


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="square_maze")
    ap.add_argument("--param", type=int, default=7)
    ap.add_argument("--refine", type=int, default=1, help="uniform refinements of the base mesh")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    key = "M" if args.family == "spiked_annulus" else "m"
    spec = geometry.build(args.family, **{key: args.param})
    mesh = build_mesh(spec)
    for _ in range(args.refine):
        mesh = refine_uniform(mesh)
    geo1 = np.ascontiguousarray(mesh.vertices[mesh.triangles])
    geo2 = np.ascontiguousarray(_dof_layout(mesh, 2)[3])
    rng = np.random.default_rng(0)
    vals2 = rng.random((len(geo2), 6))
    pts = rng.random((20000, 2))
    packed = geometry.pack_primitives(spec.outer_primitives())

    inputs = {
        "p1_stiffness": (geo1,),
        "p2_stiffness": (geo2, kernels.DN, kernels.QUAD_W),
        "p2_min_jacobian": (geo2, kernels.DN),
        "p2_energy": (geo2, vals2, kernels.DN, kernels.QUAD_W),
        "distance": (pts, packed),
    }
    print(f"{args.family} {key}={args.param}: {len(mesh.triangles)} triangles, {len(packed)} boundary primitives")
    print(f"{'kernel':<18}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (jit, ref) in PAIRS.items():
        a = inputs[name]
        jit(*a)  # compile outside the timed region
        tj, oj = best_of(jit, a, args.repeat)
        tn, on = best_of(ref, a, args.repeat)
        np.testing.assert_allclose(oj, on, rtol=1e-10, atol=1e-12)
        print(f"{name:<18}{1e3 * tj:>12.2f}{1e3 * tn:>12.2f}{tn / tj:>10.1f}")


if __name__ == "__main__":
    main()
