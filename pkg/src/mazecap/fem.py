"""Capacity of a condenser as the Dirichlet energy of its potential.

The potential is 1 on the compact set and 0 on the domain boundary (walls
included). Elements are linear or isoparametric quadratic triangles; the
error is controlled by nested uniform refinement and Richardson
extrapolation of the energy sequence.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .geometry import CondenserSpec, build_spiked_annulus, build_tangent_disks, build
from .mesh import (
    EDGE_COMPACT,
    TAG_COMPACT,
    TAG_OUTER,
    Mesh,
    MeshError,
    build_mesh,
    refine_uniform,
)

log = logging.getLogger(__name__)

# above this many unknowns the default solver is AMG-preconditioned CG
DIRECT_LIMIT = 60_000


class SolverError(RuntimeError):
    """The linear solve failed to reach its residual target."""


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class System:
    matrix: sp.csr_matrix  # full stiffness over all dofs
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    stiffness: sp.csr_matrix  # free-free block
    load: np.ndarray
    order: int
    elem_dofs: np.ndarray
    geo: np.ndarray
    dof_coords: np.ndarray
    dof_tags: np.ndarray
    mesh: Mesh

    @property
    def n_dofs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_free(self) -> int:
        return len(self.free)


@dataclass
class PotentialField:
    system: System
    values: np.ndarray
    iterations: int = 0
    residual: float = 0.0

    @property
    def order(self) -> int:
        return self.system.order

    @property
    def mesh(self) -> Mesh:
        return self.system.mesh


@dataclass
class CapacityResult:
    value: float
    est_rel_error: float
    dofs: int
    levels: list[float]
    level_dofs: list[int]
    timings: dict[str, float]
    order: int = 2
    rate: float | None = None
    converged: bool = True
    budget_exhausted: bool = False
    params: dict = field(default_factory=dict)

    @property
    def upper_bound(self) -> float:
        return self.levels[-1]

    @property
    def error_exponent(self) -> int:
        """``|ceil(log10(eps))|``, the compressed error column of the tables."""
        if self.est_rel_error <= 0:
            return 16
        if not math.isfinite(self.est_rel_error):
            return 0
        return abs(math.ceil(math.log10(self.est_rel_error)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["upper_bound"] = self.upper_bound
        d["error_exponent"] = self.error_exponent
        return d


# ---------------------------------------------------------------------------


def _dof_layout(mesh: Mesh, order: int):
    if order == 1:
        elem = mesh.triangles.copy()
        coords = mesh.vertices.copy()
        tags = mesh.vertex_tags.copy()
        geo = mesh.vertices[mesh.triangles]
        return elem, coords, tags, geo
    if order != 2:
        raise ValueError("order must be 1 or 2")
    edges, tmap = mesh.unique_edges()
    nv = mesh.n_vertices
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    etags = np.zeros(len(edges), dtype=np.int64)
    ckey = np.sort(mesh.edges, axis=1)
    n = nv
    ek = edges[:, 0] * n + edges[:, 1]
    pos = np.searchsorted(ek, ckey[:, 0] * n + ckey[:, 1])
    etags[pos] = np.where(mesh.edge_tags == EDGE_COMPACT, TAG_COMPACT, TAG_OUTER)
    node = mid.copy()
    curved = mesh.edge_curves >= 0
    cpos = pos[curved]
    if curved.any():
        cx, cy, r = mesh.curves[mesh.edge_curves[curved]].T
        cen = np.stack([cx, cy], axis=1)
        d = mid[cpos] - cen
        node[cpos] = cen + d * (r / np.linalg.norm(d, axis=1))[:, None]
    elem = np.concatenate([mesh.triangles, nv + tmap], axis=1)
    coords = np.concatenate([mesh.vertices, node])
    tags = np.concatenate([mesh.vertex_tags, etags])
    geo = coords[elem]
    # straighten curved edges that would fold an element
    for _ in range(5):
        bad = kernels.p2_min_jacobian(geo) <= 0
        if not bad.any():
            break
        fix = np.unique(elem[bad][:, 3:].ravel()) - nv
        coords[nv + fix] = mid[fix]
        geo = coords[elem]
    else:
        raise MeshError("quadratic element with non-positive Jacobian")
    return elem, coords, tags, geo


def assemble(mesh: Mesh, order: int = 2) -> System:
    """Stiffness matrix of the Laplacian with Dirichlet rows eliminated."""
    if mesh.areas().min() <= 0:
        raise MeshError("degenerate triangle in assembly")
    elem, coords, tags, geo = _dof_layout(mesh, order)
    ke = kernels.p1_stiffness(geo) if order == 1 else kernels.p2_stiffness(geo)
    nloc = elem.shape[1]
    rows = np.repeat(elem, nloc, axis=1).ravel()
    cols = np.tile(elem, (1, nloc)).ravel()
    ndof = len(coords)
    A = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(ndof, ndof)).tocsr()
    A.sum_duplicates()
    fixed = np.flatnonzero(tags != 0)
    free = np.flatnonzero(tags == 0)
    fixed_values = (tags[fixed] == TAG_COMPACT).astype(float)
    Aff = A[free][:, free].tocsr()
    Afd = A[free][:, fixed]
    load = -(Afd @ fixed_values)
    return System(A, free, fixed, fixed_values, Aff, load, order, elem, geo, coords, tags, mesh)


def solve(system: System, rel_tol: float = 1e-12, method: str = "auto", maxiter: int = 2000) -> PotentialField:
    """Solve for the potential; relative residual is checked on return."""
    A, b = system.stiffness, system.load
    n = A.shape[0]
    if n == 0:
        x = np.zeros(0)
        its = 0
    elif method == "direct" or (method == "auto" and n <= DIRECT_LIMIT):
        lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A")
        x = lu.solve(b)
        its = 1
        # iterative refinement keeps the residual at round-off level
        while its < 4 and _resid(A, x, b) > rel_tol:
            x += lu.solve(b - A @ x)
            its += 1
    elif method in ("cg", "auto"):
        import pyamg

        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric", max_coarse=500)
        M = ml.aspreconditioner(cycle="V")
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.cg(A, b, rtol=rel_tol, atol=0.0, M=M, maxiter=maxiter, callback=cb)
        its = count[0]
        if info > 0:
            raise SolverError(f"CG did not converge in {its} iterations")
    else:
        raise ValueError(f"unknown solver method {method!r}")
    res = _resid(A, x, b)
    if not np.isfinite(res) or res > max(rel_tol, 1e-10):
        raise SolverError(f"relative residual {res:.2e} above tolerance after {its} iterations")
    values = np.zeros(system.n_dofs)
    values[system.fixed] = system.fixed_values
    values[system.free] = x
    return PotentialField(system, values, its, res)


def _resid(A, x, b) -> float:
    nb = np.linalg.norm(b)
    if nb == 0:
        return float(np.linalg.norm(A @ x))
    return float(np.linalg.norm(b - A @ x) / nb)


def energy(field: PotentialField) -> float:
    """Dirichlet energy of the discrete potential by elementwise quadrature."""
    s = field.system
    vals = field.values[s.elem_dofs]
    e = kernels.p1_energy(s.geo, vals) if s.order == 1 else kernels.p2_energy(s.geo, vals)
    return float(math.fsum(e))


def matrix_energy(field: PotentialField) -> float:
    u = field.values
    return float(u @ (field.system.matrix @ u))


# ---------------------------------------------------------------------------


def richardson(values: Sequence[float], nominal_rate: float, ratio: float = 2.0) -> tuple[float, float, float | None]:
    """Extrapolate a nested-refinement sequence.

    Returns ``(limit, rel_error_of_last, observed_rate)``. The rate in
    ``h`` is observed from the last three values when they decrease
    geometrically; otherwise ``nominal_rate`` is assumed.
    """
    v = np.asarray(values, dtype=float)
    if len(v) == 1:
        return float(v[0]), math.inf, None
    rate = None
    if len(v) >= 3:
        d1, d2 = v[-3] - v[-2], v[-2] - v[-1]
        if d1 * d2 > 0 and abs(d1) > abs(d2):
            rate = math.log(abs(d1 / d2)) / math.log(ratio)
    p = nominal_rate if rate is None else min(max(rate, 0.5), nominal_rate + 1.0)
    diff = v[-2] - v[-1]
    limit = v[-1] - diff / (ratio**p - 1.0)
    err = abs(v[-1] - limit) / abs(limit) if limit else math.inf
    return float(limit), float(err), rate


def capacity(
    spec: CondenserSpec,
    order: int = 2,
    max_area: float | None = None,
    levels: int = 3,
    target_rel_err: float = 1e-4,
    grading_q: float = 0.15,
    grading_levels: int = 6,
    grading_radius: float | None = None,
    chord_tol: float | None = None,
    solver: str = "auto",
    max_dofs: int = 3_000_000,
    mesh: Mesh | None = None,
) -> CapacityResult:
    """Capacity by nested refinement of a graded mesh.

    Levels are computed until the Richardson estimate reaches
    ``target_rel_err`` or ``levels`` solves are spent.
    """
    timings = {"mesh": 0.0, "assembly": 0.0, "solve": 0.0, "energy": 0.0}
    t0 = time.perf_counter()
    if mesh is None:
        mesh = build_mesh(
            spec,
            max_area=max_area,
            chord_tol=chord_tol,
            q=grading_q,
            levels=grading_levels,
            grading_radius=grading_radius,
        )
    timings["mesh"] += time.perf_counter() - t0
    values: list[float] = []
    dofs: list[int] = []
    est, limit, rate = math.inf, math.nan, None
    nominal = 2.0 * order
    exhausted = False
    for lev in range(levels):
        if lev:
            t0 = time.perf_counter()
            mesh = refine_uniform(mesh)
            timings["mesh"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        system = assemble(mesh, order)
        timings["assembly"] += time.perf_counter() - t0
        if system.n_free > max_dofs:
            exhausted = True
            break
        t0 = time.perf_counter()
        fld = solve(system, method=solver)
        timings["solve"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        values.append(energy(fld))
        timings["energy"] += time.perf_counter() - t0
        dofs.append(system.n_free)
        log.info("level %d: dofs=%d energy=%.12g", lev, system.n_free, values[-1])
        limit, est, rate = richardson(values, nominal)
        # two levels only give an assumed rate; trust the estimate from three
        if len(values) >= min(3, levels) and est <= target_rel_err:
            break
    else:
        exhausted = est > target_rel_err
    if not values:
        raise BudgetExhausted("degrees-of-freedom budget exceeded before the first solve")
    best = limit if len(values) >= 2 else values[-1]
    return CapacityResult(
        value=best,
        est_rel_error=est,
        dofs=dofs[-1],
        levels=values,
        level_dofs=dofs,
        timings=timings,
        order=order,
        rate=rate,
        converged=est <= target_rel_err,
        budget_exhausted=exhausted,
        params={"family": spec.family, **spec.params},
    )


# ---------------------------------------------------------------------------


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class RateFit:
    family: str
    params: list[int]
    scale: list[float]  # 1/(2m) or 1/(2M)
    capacities: list[float]
    slope: float  # d log(cap) / d log(scale)
    perimeters: list[float]
    perimeter_rel_errors: list[float]
    perimeter_error_slope: float
    results: list[CapacityResult] = field(default_factory=list, repr=False)

    @property
    def rate(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("results")
        d["rate"] = self.rate
        return d


def convergence_study(
    family: str,
    param_values: Sequence[int],
    capacity_fn: Callable[[CondenserSpec], CapacityResult] | None = None,
    **opts,
) -> RateFit:
    """Power-law fit of capacity against ``1/(2m)`` over a parameter sweep."""
    from . import metrics

    if len(param_values) < 3:
        raise ValueError("a rate fit needs at least 3 parameter values")
    fam = family.replace("-", "_")
    key = "M" if fam == "spiked_annulus" else "m"
    qh = {
        "square_maze": metrics.qh_square_closed,
        "circular_maze": metrics.qh_circular_closed,
        "spiked_annulus": metrics.qh_annulus_closed,
    }[fam]
    params = sorted(int(p) for p in param_values)
    results = []
    for p in params:
        spec = build(fam, **{key: p})
        res = capacity_fn(spec) if capacity_fn else capacity(spec, **opts)
        results.append(res)
    caps = [r.value for r in results]
    scale = [1.0 / (2 * p) for p in params]
    perims = [2.0 * qh(p) for p in params]
    errs = [abs(c - P) / c for c, P in zip(caps, perims)]
    return RateFit(
        family=fam,
        params=params,
        scale=scale,
        capacities=caps,
        slope=loglog_slope(scale, caps),
        perimeters=perims,
        perimeter_rel_errors=errs,
        perimeter_error_slope=loglog_slope(scale, errs),
        results=results,
    )


@dataclass
class DefeatureRow:
    s: float
    capacity: float
    reduction: float
    est_rel_error: float


def defeature_study(
    n: int,
    rho: float | None,
    cut_radii: Sequence[float],
    cut_mode: str = "centered",
    capacity_fn: Callable[[CondenserSpec], CapacityResult] | None = None,
    **opts,
) -> list[DefeatureRow]:
    """Capacity loss as cusp neighbourhoods of touching disks are cut away."""
    radii = [float(s) for s in cut_radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("cut radii must be strictly increasing")
    if radii and radii[0] < 0:
        raise ValueError("cut radii must be non-negative")
    if not radii or radii[0] != 0.0:
        radii = [0.0] + radii
    rows = []
    base = None
    for s in radii:
        spec = build_tangent_disks(n, rho, s, cut_mode)
        res = capacity_fn(spec) if capacity_fn else capacity(spec, **opts)
        if base is None:
            base = res.value
        rows.append(DefeatureRow(s, res.value, (base - res.value) / base, res.est_rel_error))
    return rows
