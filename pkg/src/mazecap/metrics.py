"""Hyperbolic and quasihyperbolic quantities.

The quasihyperbolic length of a curve ``K`` in ``Omega`` is the integral of
``1/d(x)`` along ``K``, where ``d`` is the Euclidean distance to the
boundary. The maze families have closed-form estimates of this length;
``qh_length_numeric`` integrates the true density along the built chain and
serves as an independent check.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import (
    ArcSegment,
    Chain,
    CondenserSpec,
    GeometryError,
    build_circular_maze,
    build_spiked_annulus,
    build_square_maze,
    circular_maze_gap_angles,
    compact_clearance,
    domain_area,
    pack_primitives,
    primitive_distance,
)

# ---------------------------------------------------------------------------
# hyperbolic metrics


def hyperbolic_distance_halfplane(x, y) -> float:
    """Poincare distance in the upper half-plane."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x[1] <= 0 or y[1] <= 0:
        raise ValueError("points must lie in the open upper half-plane")
    arg = 1.0 + float(np.sum((x - y) ** 2)) / (2.0 * x[1] * y[1])
    return math.acosh(arg)


def _disk_check(*pts):
    for p in pts:
        if float(np.dot(p, p)) >= 1.0:
            raise ValueError("points must lie in the open unit disk")


def hyperbolic_distance_disk(x, y) -> float:
    """Poincare distance in the unit disk from ``sinh^2(rho/2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _disk_check(x, y)
    s2 = float(np.sum((x - y) ** 2)) / ((1.0 - x @ x) * (1.0 - y @ y))
    return 2.0 * math.asinh(math.sqrt(s2))


def hyperbolic_distance_disk_tanh(x, y) -> float:
    """Same distance from ``tanh(rho/2) = |x-y| / |1 - x conj(y)|``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _disk_check(x, y)
    zx, zy = complex(*x), complex(*y)
    return 2.0 * math.atanh(abs(zx - zy) / abs(1.0 - zx * zy.conjugate()))


def qh_disk_radial(t: float) -> float:
    """Quasihyperbolic distance from 0 to ``t`` in the unit disk."""
    if not 0 <= t < 1:
        raise ValueError("t must lie in [0, 1)")
    return math.log(1.0 / (1.0 - t))


# ---------------------------------------------------------------------------
# numeric line integral

# Gauss-Kronrod 7-15 nodes/weights on [-1, 1]
_XK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WKF = np.concatenate([_WK[:-1], _WK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes
_WGF = np.zeros(15)
_WGF[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _integrate_primitive(seg: ArcSegment, packed: np.ndarray, tol: float, max_intervals: int) -> float:
    """Adaptive GK15 of ``1/d`` along one primitive (parameter in [0, 1])."""
    L = seg.length
    if L == 0:
        return 0.0

    def gk(a, b):
        t = 0.5 * (a + b) + 0.5 * (b - a) * _NODES
        d = primitive_distance(seg.point_at(t), packed)
        if np.any(d <= 0):
            raise GeometryError("chain touches the domain boundary")
        f = L / d
        h = 0.5 * (b - a)
        k = h * float(_WKF @ f)
        g = h * float(_WGF @ f)
        return k, abs(k - g)

    # start from a few pieces so kinks of the density are bracketed early
    pieces = [(i / 8, (i + 1) / 8) for i in range(8)]
    work = [(a, b, *gk(a, b)) for a, b in pieces]
    total = sum(w[2] for w in work)
    for _ in range(max_intervals):
        err = sum(w[3] for w in work)
        if err <= tol * abs(total):
            break
        i = max(range(len(work)), key=lambda j: work[j][3])
        a, b, _, _ = work.pop(i)
        m = 0.5 * (a + b)
        work.append((a, m, *gk(a, m)))
        work.append((m, b, *gk(m, b)))
        total = sum(w[2] for w in work)
    else:
        raise ArithmeticError("quadrature interval budget exhausted")
    return math.fsum(w[2] for w in work)


def qh_length_numeric(chain: Chain, spec: CondenserSpec, tol: float = 1e-10, max_intervals: int = 20000) -> float:
    """Quasihyperbolic length of ``chain`` inside the domain of ``spec``."""
    packed = pack_primitives(spec.outer_primitives())
    parts = [_integrate_primitive(s, packed, tol, max_intervals) for s in chain.segments]
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# closed forms


def qh_square_closed(m: int) -> float:
    return 2.0 * (m * m - 1)


def qh_circular_closed(m: int) -> float:
    alpha = circular_maze_gap_angles(m)  # alpha[k] for k = 0..m-1
    arcs = sum((2 * math.pi - alpha[k]) * (2 * m - 2 * k + 1) for k in range(1, m))
    inner = math.log(1.5) / math.sin(alpha[m - 1] / 2)
    radials = sum(
        (math.log(m - k + 0.5) - math.log(m - k - 0.5)) / math.sin(alpha[k] / 2) for k in range(1, m - 1)
    )
    return float(arcs + inner + radials)


def qh_annulus_closed(M: int) -> float:
    return float(M * math.log(7.0 / 3.0) / math.sin(math.pi / (2 * M)) + 3 * math.pi * (M - 2) / M + 7 * math.pi)


@dataclass
class QhReport:
    family: str
    params: dict
    closed_form_length: float
    numeric_length: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def closed_form_perimeter(self) -> float:
        return 2.0 * self.closed_form_length

    @property
    def rel_discrepancy(self) -> float | None:
        if self.numeric_length is None:
            return None
        return abs(self.numeric_length - self.closed_form_length) / self.closed_form_length

    def to_dict(self) -> dict:
        d = asdict(self)
        d["closed_form_perimeter"] = self.closed_form_perimeter
        d["rel_discrepancy"] = self.rel_discrepancy
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    CSV_HEADER = ("family", "param", "length", "perimeter", "numeric_length", "rel_discrepancy")

    def csv_row(self) -> list:
        (param,) = self.params.values() if len(self.params) == 1 else (json.dumps(self.params),)
        return [
            self.family,
            param,
            repr(self.closed_form_length),
            repr(self.closed_form_perimeter),
            "" if self.numeric_length is None else repr(self.numeric_length),
            "" if self.rel_discrepancy is None else repr(self.rel_discrepancy),
        ]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(QhReport.CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _report(family, params, closed, spec, numeric, tol):
    num = qh_length_numeric(spec.compact_curve, spec, tol) if numeric else None
    return QhReport(family, params, closed, num)


def qh_square_maze(m: int, numeric: bool = True, tol: float = 1e-10) -> QhReport:
    if m < 3:
        raise ValueError("square maze needs m >= 3")
    spec = build_square_maze(m) if numeric else None
    return _report("square_maze", {"m": m}, qh_square_closed(m), spec, numeric, tol)


def qh_circular_maze(m: int, numeric: bool = True, tol: float = 1e-10) -> QhReport:
    if m < 3:
        raise ValueError("circular maze needs m >= 3")
    spec = build_circular_maze(m) if numeric else None
    return _report("circular_maze", {"m": m}, qh_circular_closed(m), spec, numeric, tol)


def qh_spiked_annulus(M: int, numeric: bool = True, tol: float = 1e-10) -> QhReport:
    if M < 6 or M % 2:
        raise ValueError("spiked annulus needs an even M >= 6")
    spec = build_spiked_annulus(M) if numeric else None
    return _report("spiked_annulus", {"M": M}, qh_annulus_closed(M), spec, numeric, tol)


QH_FAMILIES = {
    "square_maze": qh_square_maze,
    "circular_maze": qh_circular_maze,
    "spiked_annulus": qh_spiked_annulus,
}


def domain_quotient(spec: CondenserSpec, clearance: float | None = None) -> float:
    """``area(Omega) / d(K, boundary)**2``; slits count as zero area."""
    if clearance is None:
        clearance = compact_clearance(spec)
    if clearance <= 0:
        raise GeometryError("compact set touches the boundary")
    return domain_area(spec) / clearance**2
