"""Acceptance criteria, one test each.

Every test records a one-line verdict that ``conftest.py`` prints in the
terminal summary. Running this file as a script prints the same lines.
Reference numbers are the published table values; tolerances are fixed
below and nothing is skipped or marked as expected to fail.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from mazecap import conformal, fem, metrics
from mazecap import geometry as g
from mazecap import mesh as ms

try:
    from conftest import ACCEPTANCE
except ImportError:  # pragma: no cover
    ACCEPTANCE = {}

SQUARE = {7: (96, 192), 9: (160, 320), 11: (240, 480), 14: (390, 780)}
CIRCULAR = {5: (144, 289), 7: (294, 588), 10: (613, 1227), 12: (889, 1778), 15: (1397, 2795)}
ANNULUS = {10: (83, 167), 16: (168, 337), 20: (246, 492)}
PUBLISHED_CAPACITY = {
    ("square_maze", 7): 182.21381864123760,
    ("circular_maze", 5): 287.0934278396659,
    ("spiked_annulus", 10): 93.43853840480526,
}
# radius of the six tangent disks' centre ring; chosen so the uncut capacity
# lands on the published stretch value (the configuration itself is not given)
TANGENT_RHO = 0.0538325885377155
STRETCH_TARGET = 2.435704976


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


@lru_cache(maxsize=None)
def cap(family: str, p: int) -> fem.CapacityResult:
    key = "M" if family == "spiked_annulus" else "m"
    return fem.capacity(g.build(family, **{key: p}), levels=3, target_rel_err=1e-4)


def table_check(fn, table):
    worst = 0.0
    for p, (L, P) in table.items():
        r = fn(p, numeric=False)
        worst = max(worst, abs(r.closed_form_length - L), abs(r.closed_form_perimeter - P))
    return worst


def test_criterion_01_square_closed_forms():
    rows = {m: metrics.qh_square_maze(m, numeric=False) for m in SQUARE}
    ok = all((r.closed_form_length, r.closed_form_perimeter) == SQUARE[m] for m, r in rows.items())
    got = ", ".join(f"{m}:{r.closed_form_length:g}/{r.closed_form_perimeter:g}" for m, r in rows.items())
    record(1, ok, f"square maze length/perimeter {got}")


def test_criterion_02_circular_closed_forms():
    worst = table_check(metrics.qh_circular_maze, CIRCULAR)
    record(2, worst <= 1.0, f"circular maze max |closed - table| = {worst:.3f} (<= 1)")


def test_criterion_03_annulus_closed_forms():
    worst = table_check(metrics.qh_spiked_annulus, ANNULUS)
    record(3, worst <= 1.0, f"spiked annulus max |closed - table| = {worst:.3f} (<= 1)")


def test_criterion_04_oracle_equivalence():
    worst = {}
    for name, fn, params in (
        ("square", metrics.qh_square_maze, SQUARE),
        ("circular", metrics.qh_circular_maze, CIRCULAR),
        ("annulus", metrics.qh_spiked_annulus, ANNULUS),
    ):
        worst[name] = max(fn(p).rel_discrepancy for p in params)
    ok = all(v <= 1e-8 for v in worst.values())
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    record(4, ok, f"max rel |numeric - closed| per family: {detail} (<= 1e-8)")


def test_criterion_05_annulus_benchmark():
    res = fem.capacity(g.annulus_spec(0.25, 1.0), levels=3, target_rel_err=1e-6)
    exact = 2 * math.pi / math.log(4)
    err = abs(res.value - exact) / exact
    record(5, err <= 1e-4, f"ring capacity {res.value:.10f} vs 2pi/log4 {exact:.10f}, rel err {err:.2e} (<= 1e-4)")


def test_criterion_06_capacity_reproduction():
    parts, ok = [], True
    for (fam, p), ref in PUBLISHED_CAPACITY.items():
        v = cap(fam, p).value
        rel = abs(v - ref) / ref
        ok &= rel <= 1e-2
        parts.append(f"{fam} {p}: {v:.5f} ({rel:.1e})")
    record(6, ok, "; ".join(parts) + " (<= 1e-2)")


def rate(family, params):
    caps = [cap(family, p).value for p in params]
    return -fem.loglog_slope([1 / (2 * p) for p in params], caps)


def test_criterion_07_rate_fits():
    sq = rate("square_maze", (7, 9, 11, 14))
    ci = rate("circular_maze", (5, 7, 10))
    an = rate("spiked_annulus", (10, 16, 20))
    ok = 1.9 <= sq <= 2.2 and 1.9 <= ci <= 2.2 and 1.1 <= an <= 1.5
    record(7, ok, f"rates square {sq:.3f}, circular {ci:.3f} in [1.9, 2.2]; annulus {an:.3f} in [1.1, 1.5]")


def test_criterion_08_perimeter_exactness():
    params = (5, 7, 10)
    caps = [cap("circular_maze", m).value for m in params]
    errs = [abs(c - 2 * metrics.qh_circular_closed(m)) / c for c, m in zip(caps, params)]
    slope = fem.loglog_slope([1 / (2 * m) for m in params], errs)
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    ok = decreasing and abs(slope - 0.92) <= 0.2
    e = ", ".join(f"{x:.2e}" for x in errs)
    record(8, ok, f"circular |cap - perimeter|/cap = {e}; rate {slope:.3f} (want decreasing, 0.92 +- 0.2)")


def test_criterion_09_defeaturing():
    r = g.build_tangent_disks(6, TANGENT_RHO).params["r"]
    cuts = [f * r for f in (0.5, 0.65, 0.8)]
    rows = fem.defeature_study(6, TANGENT_RHO, cuts, levels=4, target_rel_err=1e-6)
    tol = [row.est_rel_error * row.capacity for row in rows]
    monotone = all(b.capacity <= a.capacity + ta + tb for a, b, ta, tb in zip(rows, rows[1:], tol, tol[1:]))
    top = rows[-1].reduction
    base = rows[0].capacity
    ok = monotone and 0.0 <= top <= 0.05
    record(
        9,
        ok,
        f"capacities {', '.join(f'{x.capacity:.7f}' for x in rows)} at s/r = 0, 0.5, 0.65, 0.8; "
        f"max reduction {top:.2%} (<= 5%); stretch {base:.9f} vs {STRETCH_TARGET}",
    )


def test_criterion_10_conformal_map():
    worst, ends = 0.0, True
    for th in (math.pi / 24, math.pi / 12, math.pi / 6):
        d = conformal.verify_triangle_map(g.arc_triangle(th), samples=100)
        worst = max(worst, d.max_deviation)
        ends &= abs(d.vertex_v - 1) <= 1e-12 and abs(d.vertex_vbar + 1) <= 1e-12
    record(10, worst <= 1e-10 and ends, f"max side-image deviation {worst:.2e} (<= 1e-10), h(v)=1 and h(conj v)=-1: {ends}")


def test_criterion_11_property_suites():
    monotone = True
    for spec in (g.build_square_maze(5), g.build_circular_maze(4), g.build_spiked_annulus(6)):
        lv = fem.capacity(spec, levels=3, target_rel_err=0.0).levels
        monotone &= all(b <= a * (1 + 1e-13) for a, b in zip(lv, lv[1:]))
    lo, hi = math.inf, -math.inf
    for spec in (g.build_square_maze(7), g.build_circular_maze(5), g.build_spiked_annulus(10)):
        u = fem.solve(fem.assemble(ms.build_mesh(spec), 1)).values
        lo, hi = min(lo, u.min()), max(hi, u.max())
    maxp = lo >= -1e-8 and hi <= 1 + 1e-8
    rng = np.random.default_rng(2024)
    ineq = True
    for _ in range(2000):
        s, t = np.sort(rng.uniform(0, 0.9999, 2))
        phi = rng.uniform(0, 2 * math.pi)
        e = np.array([math.cos(phi), math.sin(phi)])
        rho = metrics.hyperbolic_distance_disk(s * e, t * e)
        k = math.log((1 - s) / (1 - t))
        ineq &= rho <= 2 * k * (1 + 1e-12) + 1e-15 and 2 * k <= 4 * rho * (1 + 1e-12) + 1e-15
    record(
        11,
        monotone and maxp and ineq,
        f"energy monotone: {monotone}; P1 range [{lo:.2e}, {1 - hi:+.2e} from 1]; rho <= 2k <= 4rho: {ineq}",
    )


if __name__ == "__main__":  # pragma: no cover
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        print(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
