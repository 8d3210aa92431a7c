"""Exact boundary geometry of condenser pairs (domain, compact set).

Every curve is a chain of straight segments and circular arcs. Walls that
are slits in the domain appear twice in the outer loops (out and back), so
the loops always enclose the domain and slits contribute zero signed area.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from ._accel import njit, pick

TWO_PI = 2.0 * math.pi
GEOM_TOL = 1e-12
SPEC_FORMAT_VERSION = 1

FAMILIES = ("square_maze", "circular_maze", "spiked_annulus", "tangent_disks", "custom")


class GeometryError(ValueError):
    """Invalid parameters or malformed geometry."""


Point = tuple[float, float]


def _pt(p: Sequence[float]) -> Point:
    return (float(p[0]), float(p[1]))


@dataclass(frozen=True)
class ArcSegment:
    """A straight segment ``p0 -> p1`` or a circular arc.

    Arcs run from ``angle_start`` to ``angle_end``; the sign of the sweep
    gives the orientation.
    """

    kind: str
    p0: Point | None = None
    p1: Point | None = None
    center: Point | None = None
    radius: float = 0.0
    angle_start: float = 0.0
    angle_end: float = 0.0

    def __post_init__(self):
        if self.kind == "segment":
            if self.p0 is None or self.p1 is None:
                raise GeometryError("segment needs p0 and p1")
            if math.dist(self.p0, self.p1) <= GEOM_TOL:
                raise GeometryError("degenerate segment")
        elif self.kind == "arc":
            if self.center is None or not self.radius > 0:
                raise GeometryError("arc needs a center and a positive radius")
            sweep = abs(self.angle_end - self.angle_start)
            if not 0 < sweep <= TWO_PI + GEOM_TOL:
                raise GeometryError(f"arc sweep {sweep} outside (0, 2pi]")
        else:
            raise GeometryError(f"unknown primitive kind {self.kind!r}")

    @classmethod
    def segment(cls, p0, p1) -> "ArcSegment":
        return cls("segment", p0=_pt(p0), p1=_pt(p1))

    @classmethod
    def arc(cls, center, radius, angle_start, angle_end) -> "ArcSegment":
        return cls(
            "arc",
            center=_pt(center),
            radius=float(radius),
            angle_start=float(angle_start),
            angle_end=float(angle_end),
        )

    @property
    def orientation(self) -> str:
        if self.kind != "arc":
            return "none"
        return "ccw" if self.angle_end > self.angle_start else "cw"

    @property
    def sweep(self) -> float:
        return self.angle_end - self.angle_start

    @property
    def start(self) -> Point:
        return self.point_at(0.0)

    @property
    def end(self) -> Point:
        return self.point_at(1.0)

    @property
    def length(self) -> float:
        if self.kind == "segment":
            return math.dist(self.p0, self.p1)
        return self.radius * abs(self.sweep)

    def point_at(self, t):
        """Point(s) at curve parameter ``t`` in [0, 1] (scalar or array)."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        if self.kind == "segment":
            x = self.p0[0] + t * (self.p1[0] - self.p0[0])
            y = self.p0[1] + t * (self.p1[1] - self.p0[1])
        else:
            a = self.angle_start + t * self.sweep
            x = self.center[0] + self.radius * np.cos(a)
            y = self.center[1] + self.radius * np.sin(a)
        if scalar:
            return (float(x), float(y))
        return np.stack([x, y], axis=-1)

    def reversed(self) -> "ArcSegment":
        if self.kind == "segment":
            return ArcSegment.segment(self.p1, self.p0)
        return ArcSegment.arc(self.center, self.radius, self.angle_end, self.angle_start)

    def distance(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return primitive_distance(pts, _pack([self])).reshape(np.shape(points)[:-1])

    def to_dict(self) -> dict:
        if self.kind == "segment":
            return {"kind": "segment", "p0": list(self.p0), "p1": list(self.p1)}
        return {
            "kind": "arc",
            "center": list(self.center),
            "radius": self.radius,
            "angle_start": self.angle_start,
            "angle_end": self.angle_end,
            "orientation": self.orientation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArcSegment":
        if d["kind"] == "segment":
            return cls.segment(d["p0"], d["p1"])
        if d["kind"] == "arc":
            return cls.arc(d["center"], d["radius"], d["angle_start"], d["angle_end"])
        raise GeometryError(f"unknown primitive kind {d.get('kind')!r}")


@dataclass(frozen=True)
class Chain:
    segments: tuple[ArcSegment, ...]
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise GeometryError("empty chain")

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    @property
    def start(self) -> Point:
        return self.segments[0].start

    @property
    def end(self) -> Point:
        return self.segments[-1].end

    def closure_defects(self, tol: float = GEOM_TOL) -> list[str]:
        out = []
        for i, (a, b) in enumerate(zip(self.segments, self.segments[1:])):
            gap = math.dist(a.end, b.start)
            if gap > tol:
                out.append(f"gap {gap:.3e} between primitives {i} and {i + 1}")
        if self.closed:
            gap = math.dist(self.end, self.start)
            if gap > tol:
                out.append(f"closed chain does not close (gap {gap:.3e})")
        return out

    def sample(self, n_per_primitive: int = 64) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n_per_primitive)
        return np.concatenate([s.point_at(t) for s in self.segments])

    def to_dict(self) -> dict:
        return {"closed": self.closed, "segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d: dict) -> "Chain":
        return cls(tuple(ArcSegment.from_dict(s) for s in d["segments"]), bool(d["closed"]))


@dataclass(frozen=True)
class CondenserSpec:
    """A condenser: domain boundary loops plus the compact set.

    Exactly one of ``compact_curve`` (a 1D chain) or ``compact_region``
    (closed loops bounding a 2D set) is given.
    """

    outer: tuple[Chain, ...]
    compact_curve: Chain | None = None
    compact_region: tuple[Chain, ...] | None = None
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "outer", tuple(self.outer))
        if self.compact_region is not None:
            object.__setattr__(self, "compact_region", tuple(self.compact_region))
        if (self.compact_curve is None) == (self.compact_region is None):
            raise GeometryError("give exactly one of compact_curve / compact_region")
        if self.family not in FAMILIES:
            raise GeometryError(f"unknown family {self.family!r}")
        if any(not c.closed for c in self.outer):
            raise GeometryError("outer loops must be closed")

    @property
    def compact_chains(self) -> tuple[Chain, ...]:
        if self.compact_curve is not None:
            return (self.compact_curve,)
        return self.compact_region

    def outer_primitives(self) -> list[ArcSegment]:
        return [s for c in self.outer for s in c.segments]

    def compact_primitives(self) -> list[ArcSegment]:
        return [s for c in self.compact_chains for s in c.segments]

    def to_dict(self) -> dict:
        if self.compact_curve is not None:
            compact = {"curve": self.compact_curve.to_dict()}
        else:
            compact = {"region": [c.to_dict() for c in self.compact_region]}
        return {
            "format": "mazecap-condenser",
            "version": SPEC_FORMAT_VERSION,
            "family": self.family,
            "params": dict(self.params),
            "outer": [c.to_dict() for c in self.outer],
            "compact": compact,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CondenserSpec":
        if d.get("format") != "mazecap-condenser":
            raise GeometryError("not a condenser spec document")
        if d.get("version") != SPEC_FORMAT_VERSION:
            raise GeometryError(f"unsupported spec version {d.get('version')!r}")
        compact = d["compact"]
        curve = region = None
        if "curve" in compact:
            curve = Chain.from_dict(compact["curve"])
        elif "region" in compact:
            region = tuple(Chain.from_dict(c) for c in compact["region"])
        else:
            raise GeometryError("compact must hold 'curve' or 'region'")
        return cls(
            outer=tuple(Chain.from_dict(c) for c in d["outer"]),
            compact_curve=curve,
            compact_region=region,
            family=d["family"],
            params=dict(d.get("params", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "CondenserSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GeometryError(f"malformed spec JSON: {exc}") from exc
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError, IndexError) as exc:
            raise GeometryError(f"malformed spec document: {exc!r}") from exc


# ---------------------------------------------------------------------------
# packed primitive arrays and distance kernels


def _pack(prims: Iterable[ArcSegment]) -> np.ndarray:
    """Pack primitives into rows ``(kind, a, b, c, d, e)``.

    Segments: ``(0, x0, y0, x1, y1, 0)``; arcs: ``(1, cx, cy, r, a_lo, sweep)``
    with ``sweep >= 0`` measured counter-clockwise from ``a_lo``.
    """
    rows = []
    for s in prims:
        if s.kind == "segment":
            rows.append((0.0, *s.p0, *s.p1, 0.0))
        else:
            lo = min(s.angle_start, s.angle_end)
            rows.append((1.0, *s.center, s.radius, lo, abs(s.sweep)))
    return np.array(rows, dtype=float).reshape(-1, 6)


def pack_primitives(prims: Iterable[ArcSegment]) -> np.ndarray:
    return _pack(prims)


@njit
def _distance_kernel(pts, prims):
    n = pts.shape[0]
    out = np.empty(n)
    two_pi = 2.0 * np.pi
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        best = np.inf
        for j in range(prims.shape[0]):
            if prims[j, 0] == 0.0:
                x0 = prims[j, 1]
                y0 = prims[j, 2]
                dx = prims[j, 3] - x0
                dy = prims[j, 4] - y0
                t = ((px - x0) * dx + (py - y0) * dy) / (dx * dx + dy * dy)
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                ex = x0 + t * dx - px
                ey = y0 + t * dy - py
                d = np.sqrt(ex * ex + ey * ey)
            else:
                cx = prims[j, 1]
                cy = prims[j, 2]
                r = prims[j, 3]
                lo = prims[j, 4]
                sw = prims[j, 5]
                qx = px - cx
                qy = py - cy
                rho = np.sqrt(qx * qx + qy * qy)
                rel = (np.arctan2(qy, qx) - lo) % two_pi
                if rel <= sw or sw >= two_pi:
                    d = abs(rho - r)
                else:
                    ax = cx + r * np.cos(lo) - px
                    ay = cy + r * np.sin(lo) - py
                    bx = cx + r * np.cos(lo + sw) - px
                    by = cy + r * np.sin(lo + sw) - py
                    d = min(np.sqrt(ax * ax + ay * ay), np.sqrt(bx * bx + by * by))
            if d < best:
                best = d
        out[i] = best
    return out


def _distance_numpy(pts, prims):
    best = np.full(pts.shape[0], np.inf)
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    seg = prims[prims[:, 0] == 0.0]
    if len(seg):
        x0, y0, x1, y1 = seg[:, 1], seg[:, 2], seg[:, 3], seg[:, 4]
        dx, dy = x1 - x0, y1 - y0
        t = np.clip(((px - x0) * dx + (py - y0) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
        d = np.hypot(x0 + t * dx - px, y0 + t * dy - py)
        best = np.minimum(best, d.min(axis=1))
    arc = prims[prims[:, 0] == 1.0]
    if len(arc):
        cx, cy, r, lo, sw = arc[:, 1], arc[:, 2], arc[:, 3], arc[:, 4], arc[:, 5]
        qx, qy = px - cx, py - cy
        rho = np.hypot(qx, qy)
        rel = np.mod(np.arctan2(qy, qx) - lo, TWO_PI)
        inside = (rel <= sw) | (sw >= TWO_PI)
        da = np.hypot(cx + r * np.cos(lo) - px, cy + r * np.sin(lo) - py)
        db = np.hypot(cx + r * np.cos(lo + sw) - px, cy + r * np.sin(lo + sw) - py)
        d = np.where(inside, np.abs(rho - r), np.minimum(da, db))
        best = np.minimum(best, d.min(axis=1))
    return best


def primitive_distance(points: np.ndarray, packed: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the nearest packed primitive."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
    return pick(_distance_kernel, _distance_numpy)(pts, np.ascontiguousarray(packed))


def _winding(loop: Chain, p: Point) -> float:
    """Winding number of a closed chain around ``p`` (arcs handled exactly)."""
    total = 0.0
    px, py = p
    for s in loop.segments:
        if s.kind == "segment":
            pieces = [(s.p0, s.p1, None)]
        else:
            k = max(1, math.ceil(abs(s.sweep) / (math.pi / 8)))
            t = np.linspace(0.0, 1.0, k + 1)
            pts = s.point_at(t)
            pieces = [(tuple(pts[i]), tuple(pts[i + 1]), s) for i in range(k)]
        for a, b, arc in pieces:
            ax, ay = a[0] - px, a[1] - py
            bx, by = b[0] - px, b[1] - py
            total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
            if arc is not None:
                cx, cy = arc.center
                if math.hypot(px - cx, py - cy) < arc.radius:
                    # p between chord and arc: the arc winds once more than the chord
                    mx, my = 0.5 * (a[0] + b[0]) - cx, 0.5 * (a[1] + b[1]) - cy
                    if (px - cx) * mx + (py - cy) * my > mx * mx + my * my:
                        total += TWO_PI if arc.sweep > 0 else -TWO_PI
    return total / TWO_PI


def contains(spec: CondenserSpec, p: Sequence[float], tol: float = GEOM_TOL) -> bool:
    """True if ``p`` lies strictly inside the domain (off all walls)."""
    p = _pt(p)
    w = sum(_winding(loop, p) for loop in spec.outer)
    if abs(w) < 0.5:
        return False
    return float(primitive_distance(np.array([p]), _pack(spec.outer_primitives()))[0]) > tol


def distance_to_boundary(spec: CondenserSpec, p, check: bool = True) -> float | np.ndarray:
    """Exact distance from ``p`` (a point or an ``(n, 2)`` array) to the domain boundary."""
    pts = np.asarray(p, dtype=float)
    if check:
        for q in pts.reshape(-1, 2):
            if not contains(spec, q):
                raise GeometryError(f"point {tuple(q)} is not inside the domain")
    d = primitive_distance(pts.reshape(-1, 2), _spec_pack(spec))
    return float(d[0]) if pts.ndim == 1 else d


_PACK_CACHE: dict[int, tuple[CondenserSpec, np.ndarray]] = {}


def _spec_pack(spec: CondenserSpec) -> np.ndarray:
    hit = _PACK_CACHE.get(id(spec))
    if hit is not None and hit[0] is spec:
        return hit[1]
    packed = _pack(spec.outer_primitives())
    if len(_PACK_CACHE) > 64:
        _PACK_CACHE.clear()
    _PACK_CACHE[id(spec)] = (spec, packed)
    return packed


# ---------------------------------------------------------------------------
# primitive intersection (validation)


def _polyline(s: ArcSegment, max_angle: float = math.pi / 64) -> np.ndarray:
    if s.kind == "segment":
        return np.array([s.p0, s.p1])
    k = max(2, math.ceil(abs(s.sweep) / max_angle))
    return s.point_at(np.linspace(0.0, 1.0, k + 1))


def _prims_intersect(a: ArcSegment, b: ArcSegment, touch_ok: bool) -> bool:
    """Approximate crossing test of two primitives via fine polylines.

    Shared endpoints are permitted when ``touch_ok``.
    """
    pa, pb = _polyline(a), _polyline(b)
    if touch_ok:
        ends_a = (np.array(a.start), np.array(a.end))
        ends_b = (np.array(b.start), np.array(b.end))
        shared = [e for e in ends_a if any(np.linalg.norm(e - f) <= 1e-9 for f in ends_b)]
    else:
        shared = []
    for i in range(len(pa) - 1):
        p, q = pa[i], pa[i + 1]
        for j in range(len(pb) - 1):
            r, s = pb[j], pb[j + 1]
            if _seg_cross(p, q, r, s):
                hit = _seg_intersection(p, q, r, s)
                if hit is None or not any(np.linalg.norm(hit - e) <= 1e-9 for e in shared):
                    return True
    return False


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _seg_cross(p, q, r, s, eps=1e-14):
    if max(p[0], q[0]) < min(r[0], s[0]) - 1e-12 or max(r[0], s[0]) < min(p[0], q[0]) - 1e-12:
        return False
    if max(p[1], q[1]) < min(r[1], s[1]) - 1e-12 or max(r[1], s[1]) < min(p[1], q[1]) - 1e-12:
        return False
    d1, d2 = _orient(r, s, p), _orient(r, s, q)
    d3, d4 = _orient(p, q, r), _orient(p, q, s)
    return d1 * d2 <= eps and d3 * d4 <= eps


def _seg_intersection(p, q, r, s):
    d = (q[0] - p[0]) * (s[1] - r[1]) - (q[1] - p[1]) * (s[0] - r[0])
    if abs(d) < 1e-300:
        return None
    t = ((r[0] - p[0]) * (s[1] - r[1]) - (r[1] - p[1]) * (s[0] - r[0])) / d
    return np.array([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])])


def chain_self_intersections(chain: Chain) -> list[tuple[int, int]]:
    segs = chain.segments
    n = len(segs)
    bad = []
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (chain.closed and i == 0 and j == n - 1)
            if _prims_intersect(segs[i], segs[j], touch_ok=adjacent):
                bad.append((i, j))
    return bad


@dataclass
class Diagnostics:
    valid: bool
    clearance: float
    violations: list[str]

    def to_dict(self) -> dict:
        return {"valid": self.valid, "clearance": self.clearance, "violations": list(self.violations)}


def compact_clearance(spec: CondenserSpec, samples: int = 400) -> float:
    """d(K, boundary), minimised over the compact primitives.

    Each compact primitive is sampled densely and the minimum is then
    polished with a golden-section search around the best sample.
    """
    packed = _spec_pack(spec)
    best = math.inf
    for s in spec.compact_primitives():
        t = np.linspace(0.0, 1.0, samples)
        d = primitive_distance(s.point_at(t), packed)
        i = int(np.argmin(d))
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, samples - 1)]
        f = lambda x: float(primitive_distance(np.array([s.point_at(x)]), packed)[0])
        g = (math.sqrt(5) - 1) / 2
        a, b = lo, hi
        c, e = b - g * (b - a), a + g * (b - a)
        fc, fe = f(c), f(e)
        for _ in range(60):
            if fc < fe:
                b, e, fe = e, c, fc
                c = b - g * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, e, fe
                e = a + g * (b - a)
                fe = f(e)
        best = min(best, float(d[i]), fc, fe, f(lo), f(hi))
    return best


def validate_spec(spec: CondenserSpec) -> Diagnostics:
    """Check closure, self-intersection and positive clearance of a spec."""
    violations: list[str] = []
    for k, loop in enumerate(spec.outer):
        violations += [f"outer loop {k}: {m}" for m in loop.closure_defects()]
    for k, ch in enumerate(spec.compact_chains):
        violations += [f"compact chain {k}: {m}" for m in ch.closure_defects()]
        for i, j in chain_self_intersections(ch):
            violations.append(f"compact chain {k}: primitives {i} and {j} intersect")
    if spec.compact_region is not None and any(not c.closed for c in spec.compact_region):
        violations.append("compact region loops must be closed")
    clearance = compact_clearance(spec)
    if not clearance > GEOM_TOL:
        violations.append(f"compact set touches the boundary (clearance {clearance:.3e})")
    else:
        probe = spec.compact_primitives()[0].point_at(0.5)
        if not contains(spec, probe):
            violations.append("compact set lies outside the domain")
    return Diagnostics(valid=not violations, clearance=clearance, violations=violations)


def signed_area(loop: Chain) -> float:
    """Signed area enclosed by a closed chain (arcs integrated exactly)."""
    area = 0.0
    for s in loop.segments:
        if s.kind == "segment":
            (x0, y0), (x1, y1) = s.p0, s.p1
            area += 0.5 * (x0 * y1 - x1 * y0)
        else:
            cx, cy = s.center
            r, a0, a1 = s.radius, s.angle_start, s.angle_end
            # 1/2 \int x dy - y dx along c + r e^{ia}
            area += 0.5 * (
                r * r * (a1 - a0)
                + cx * r * (math.sin(a1) - math.sin(a0))
                - cy * r * (math.cos(a1) - math.cos(a0))
            )
    return area


def domain_area(spec: CondenserSpec) -> float:
    return abs(sum(signed_area(loop) for loop in spec.outer))


# ---------------------------------------------------------------------------
# builders


def _closed(prims: list[ArcSegment]) -> Chain:
    return Chain(tuple(prims), closed=True)


def _slit(p, q) -> list[ArcSegment]:
    """Out-and-back traversal of a wall slit from ``p`` to ``q``."""
    return [ArcSegment.segment(p, q), ArcSegment.segment(q, p)]


def unit_disk_spec(compact: Chain | None = None, compact_region=None, params=None) -> CondenserSpec:
    circle = _closed([ArcSegment.arc((0.0, 0.0), 1.0, 0.0, TWO_PI)])
    return CondenserSpec((circle,), compact, compact_region, "custom", dict(params or {}))


def annulus_spec(r0: float = 0.25, r1: float = 1.0) -> CondenserSpec:
    """Concentric ring: the compact set is the closed disk of radius ``r0``."""
    if not 0 < r0 < r1:
        raise GeometryError("need 0 < r0 < r1")
    outer = _closed([ArcSegment.arc((0.0, 0.0), r1, 0.0, TWO_PI)])
    inner = _closed([ArcSegment.arc((0.0, 0.0), r0, 0.0, TWO_PI)])
    return CondenserSpec((outer,), None, (inner,), "custom", {"r0": r0, "r1": r1})


def build_square_maze(m: int) -> CondenserSpec:
    """Unit square with ``m - 1`` alternating horizontal spikes.

    Spike ``k`` sits at height ``k/m`` and has length ``1 - 1/m``; odd ``k``
    attach to the left edge. The compact set is the serpentine through the
    ``m`` corridors at clearance ``1/(2m)``.
    """
    if int(m) != m or m < 3:
        raise GeometryError("m must be >= 3")
    m = int(m)
    h = 1.0 / m
    c = 0.5 / m
    left_spikes = [k for k in range(1, m) if k % 2 == 1]
    right_spikes = [k for k in range(1, m) if k % 2 == 0]

    # outer loop, ccw from the origin; slits inserted where they attach
    prims: list[ArcSegment] = []
    prims.append(ArcSegment.segment((0.0, 0.0), (1.0, 0.0)))
    y = 0.0
    for k in sorted(right_spikes):
        prims.append(ArcSegment.segment((1.0, y), (1.0, k * h)))
        prims += _slit((1.0, k * h), (h, k * h))
        y = k * h
    prims.append(ArcSegment.segment((1.0, y), (1.0, 1.0)))
    prims.append(ArcSegment.segment((1.0, 1.0), (0.0, 1.0)))
    y = 1.0
    for k in sorted(left_spikes, reverse=True):
        prims.append(ArcSegment.segment((0.0, y), (0.0, k * h)))
        prims += _slit((0.0, k * h), (1.0 - h, k * h))
        y = k * h
    prims.append(ArcSegment.segment((0.0, y), (0.0, 0.0)))

    xl, xr = c, 1.0 - c
    chain: list[ArcSegment] = []
    for k in range(1, m + 1):
        yk = (2 * k - 1) * c
        # corridor k is entered on the side where spike k - 1 leaves its gap
        going_right = k % 2 == 1
        a, b = (xl, xr) if going_right else (xr, xl)
        chain.append(ArcSegment.segment((a, yk), (b, yk)))
        if k < m:
            chain.append(ArcSegment.segment((b, yk), (b, yk + h)))
    return CondenserSpec(
        (_closed(prims),), Chain(tuple(chain)), None, "square_maze", {"m": m}
    )


def circular_maze_gap_angles(m: int) -> np.ndarray:
    """Gap widths ``alpha_0 .. alpha_{m-1}``.

    ``alpha_k = 2 asin(1/(2(m-k)-1))`` for ``k <= m-2`` and
    ``alpha_{m-1} = 2 asin(1/2)``; ``alpha_0`` (a virtual gap in the unit
    circle) positions the free end of the compact chain.
    """
    a = [2.0 * math.asin(1.0 / (2 * (m - k) - 1)) for k in range(0, m - 1)]
    a.append(2.0 * math.asin(0.5))
    return np.array(a)


def build_circular_maze(m: int) -> CondenserSpec:
    """Unit disk with a spiral wall of ``m - 1`` arcs and ``m`` radial pieces.

    Wall circle ``k`` has radius ``r_k = (m-k)/m`` and a gap over
    ``(theta_{k-1}, theta_k)`` with ``theta_k = theta_{k-1} + alpha_k``;
    radial wall ``k`` lies at ``theta_k`` over ``[r_{k+1}, r_k]``
    (``r_0 = 1``, ``r_m = 0``) and closes corridor ``k + 1``. The spiral is
    attached to the unit circle, so the domain is simply connected.
    """
    if int(m) != m or m < 3:
        raise GeometryError("m must be >= 3")
    m = int(m)
    alpha = circular_maze_gap_angles(m)
    theta = np.zeros(m)
    theta[0] = 0.0
    for k in range(1, m):
        theta[k] = theta[k - 1] + alpha[k]
    r = np.array([(m - k) / m for k in range(m + 1)])
    O = (0.0, 0.0)

    def polar(rad, ang):
        return (rad * math.cos(ang), rad * math.sin(ang))

    # spiral from the unit circle inwards
    spiral: list[ArcSegment] = [ArcSegment.segment(polar(1.0, theta[0]), polar(r[1], theta[0]))]
    for k in range(1, m):
        # wall arc k runs clockwise from theta_{k-1} + 2pi down to theta_k
        spiral.append(ArcSegment.arc(O, r[k], theta[k - 1] + TWO_PI, theta[k]))
        end = polar(r[k + 1], theta[k]) if k + 1 < m else O
        spiral.append(ArcSegment.segment(polar(r[k], theta[k]), end))
    back = [s.reversed() for s in reversed(spiral)]
    outer = [ArcSegment.arc(O, 1.0, theta[0], theta[0] + TWO_PI)] + spiral + back
    # the full-circle arc ends where the spiral starts; rotate so the loop starts there
    loop = _closed(outer)

    half = 0.5 / m
    phi = np.empty(m)
    phi[0] = theta[0] - alpha[0] / 2
    for k in range(1, m):
        phi[k] = theta[k - 1] + alpha[k] / 2
    chain: list[ArcSegment] = []
    start = phi[0]
    for k in range(1, m):
        rho = r[k] + half
        end = phi[k] - TWO_PI if phi[k] > start else phi[k]
        while start - end > TWO_PI:
            end += TWO_PI
        chain.append(ArcSegment.arc(O, rho, start, end))
        lower = r[k] - half if k < m - 1 else r[k]
        chain.append(ArcSegment.segment(polar(rho, phi[k]), polar(lower, phi[k])))
        start = phi[k]
    return CondenserSpec(
        (loop,), Chain(tuple(chain)), None, "circular_maze", {"m": m}
    )


def spiked_annulus_radii(r0=0.25, r1=1.0, l0=0.5, l1=0.5) -> tuple[float, float]:
    """Radii ``(R0, R1)`` of the inner and outer arcs of the compact chain."""
    return 0.5 * (r0 + r1 - l1), 0.5 * (r0 + l0 + r1)


def build_spiked_annulus(M: int, r0: float = 0.25, r1: float = 1.0, l0: float = 0.5, l1: float = 0.5) -> CondenserSpec:
    """Annulus ``r0 < |z| < r1`` with ``M`` alternating radial spikes.

    Compact radials sit at angles ``2 pi j / M``; spikes lie midway
    between consecutive radials, inner spikes under the outer arcs and
    outer spikes over the inner arcs. The chain leaves out one inner arc,
    so it has ``M/2`` outer and ``M/2 - 1`` inner arcs.
    """
    if int(M) != M or M < 6 or M % 2:
        raise GeometryError("M must be an even integer >= 6")
    M = int(M)
    if not (0 < r0 < r1 and 0 < l0 and 0 < l1 and r0 + l0 < r1 and r1 - l1 > r0):
        raise GeometryError("spikes must not reach the opposite boundary circle")
    R0, R1 = spiked_annulus_radii(r0, r1, l0, l1)
    if not (r0 < R0 < r1 - l1 and r0 + l0 < R1 < r1 and R0 < R1):
        raise GeometryError("compact arcs do not fit between spike tips and the boundary")
    O = (0.0, 0.0)
    step = TWO_PI / M
    psi = [j * step for j in range(M)]
    spike_ang = [(j + 0.5) * step for j in range(M)]
    inner_spikes = spike_ang[0::2]  # under the outer arcs
    outer_spikes = spike_ang[1::2]

    def polar(rad, ang):
        return (rad * math.cos(ang), rad * math.sin(ang))

    # outer circle ccw, inward slits at outer spikes
    prims: list[ArcSegment] = []
    a = outer_spikes[0]
    for i in range(len(outer_spikes)):
        prims += _slit(polar(r1, a), polar(r1 - l1, a))
        b = outer_spikes[i + 1] if i + 1 < len(outer_spikes) else outer_spikes[0] + TWO_PI
        prims.append(ArcSegment.arc(O, r1, a, b))
        a = b
    outer_loop = _closed(prims)
    # inner circle cw (hole), outward slits at inner spikes
    prims = []
    angs = sorted(inner_spikes, reverse=True)
    a = angs[0]
    for i in range(len(angs)):
        prims += _slit(polar(r0, a), polar(r0 + l0, a))
        b = angs[i + 1] if i + 1 < len(angs) else angs[0] - TWO_PI
        prims.append(ArcSegment.arc(O, r0, a, b))
        a = b
    inner_loop = _closed(prims)

    chain: list[ArcSegment] = []
    for j in range(M):
        up = j % 2 == 0
        lo_pt, hi_pt = polar(R0, psi[j]), polar(R1, psi[j])
        chain.append(ArcSegment.segment(lo_pt, hi_pt) if up else ArcSegment.segment(hi_pt, lo_pt))
        if j + 1 < M:
            rad = R1 if up else R0
            chain.append(ArcSegment.arc(O, rad, psi[j], psi[j + 1]))
    params = {"M": M, "r0": r0, "r1": r1, "l0": l0, "l1": l1, "R0": R0, "R1": R1, "C1": R1 - R0}
    return CondenserSpec(
        (outer_loop, inner_loop), Chain(tuple(chain)), None, "spiked_annulus", params
    )


def tangent_disk_layout(n: int, rho: float) -> tuple[np.ndarray, float, np.ndarray]:
    """Centers, common radius and tangency points of ``n`` touching disks."""
    r = rho * math.sin(math.pi / n)
    j = np.arange(n)
    centers = rho * np.stack([np.cos(2 * np.pi * j / n), np.sin(2 * np.pi * j / n)], axis=1)
    tang_r = rho * math.cos(math.pi / n)
    ang = np.pi * (2 * j + 1) / n
    tangency = tang_r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return centers, r, tangency


def default_tangent_rho(n: int, envelope: float = 0.9) -> float:
    """``rho`` putting the disks internally tangent to ``|z| = envelope``."""
    return envelope / (1.0 + math.sin(math.pi / n))


def _circle_intersections(c1, r1, c2, r2):
    c1, c2 = np.asarray(c1, float), np.asarray(c2, float)
    d = float(np.linalg.norm(c2 - c1))
    if d > r1 + r2 or d < abs(r1 - r2) or d == 0:
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    e = (c2 - c1) / d
    base = c1 + a * e
    perp = np.array([-e[1], e[0]])
    return [base + h * perp, base - h * perp]


def build_tangent_disks(n: int, rho: float | None = None, cut_radius: float = 0.0, cut_mode: str = "centered") -> CondenserSpec:
    """Unit disk with ``n`` mutually tangent disks as the compact set.

    With ``cut_radius = s > 0`` the open cutting disks are removed from the
    compact set: ``B(t_j, s)`` (``cut_mode="centered"``) or the disk of
    radius ``s`` through ``t_j`` centred on the outward ray
    (``cut_mode="outward"``).
    """
    if int(n) != n or n < 3:
        raise GeometryError("n must be an integer >= 3")
    n = int(n)
    if rho is None:
        rho = default_tangent_rho(n)
    rho = float(rho)
    s = float(cut_radius)
    centers, r, tang = tangent_disk_layout(n, rho)
    if not rho > 0 or rho * (1 + math.sin(math.pi / n)) >= 1.0:
        raise GeometryError("disks must lie inside the unit disk")
    if not 0 <= s < r:
        raise GeometryError("cut radius must satisfy 0 <= s < disk radius")
    if cut_mode not in ("centered", "outward"):
        raise GeometryError(f"unknown cut mode {cut_mode!r}")
    if cut_mode == "centered":
        cut_centers = tang
    else:
        cut_centers = tang * (1.0 + s / np.linalg.norm(tang, axis=1))[:, None]
    if s > 0:
        # neighbouring cuts on one disk must stay apart
        for j in range(n):
            a, b = cut_centers[j - 1], cut_centers[j]
            if np.linalg.norm(a - b) <= 2 * s:
                raise GeometryError("cutting disks overlap; reduce the cut radius")

    O = (0.0, 0.0)
    loops: list[Chain] = []
    for j in range(n):
        c = centers[j]
        base = math.atan2(c[1], c[0])
        if s == 0:
            # start at the tangency with disk j-1 so t_j lands on a primitive endpoint
            a_prev = math.atan2(tang[j - 1][1] - c[1], tang[j - 1][0] - c[0])
            a_next = math.atan2(tang[j][1] - c[1], tang[j][0] - c[0])
            while a_next <= a_prev:
                a_next += TWO_PI
            loops.append(
                _closed(
                    [
                        ArcSegment.arc(tuple(c), r, a_prev, a_next),
                        ArcSegment.arc(tuple(c), r, a_next, a_prev + TWO_PI),
                    ]
                )
            )
            continue
        prims: list[ArcSegment] = []
        cuts = []
        for k in (j - 1, j):
            cc = cut_centers[k]
            pts = _circle_intersections(c, r, cc, s)
            if len(pts) != 2:
                raise GeometryError("cutting circle does not cross the disk boundary")
            angs = []
            for p in pts:
                angs.append(math.atan2(p[1] - c[1], p[0] - c[0]))
            mid = math.atan2(cc[1] - c[1], cc[0] - c[0])
            # order the two crossings around the direction of the cut centre
            rel = [((a - mid + math.pi) % TWO_PI) - math.pi for a in angs]
            order = np.argsort(rel)
            lo, hi = (mid + rel[order[0]], mid + rel[order[1]])
            p_lo, p_hi = pts[order[0]], pts[order[1]]
            cuts.append((lo, hi, cc, p_lo, p_hi))
        (lo1, hi1, cc1, p1lo, p1hi), (lo2, hi2, cc2, p2lo, p2hi) = cuts
        # disk arc from the end of cut 1 to the start of cut 2 (ccw), then the
        # cut-2 arc (clockwise about its centre, it is concave for the region),
        # disk arc to cut 1 start, cut-1 arc
        a_start, a_end = hi1, lo2
        while a_end <= a_start:
            a_end += TWO_PI
        prims.append(ArcSegment.arc(tuple(c), r, a_start, a_end))
        prims.append(_cut_arc(cc2, s, p2lo, p2hi, c))
        b_start, b_end = hi2, lo1
        while b_end <= b_start:
            b_end += TWO_PI
        prims.append(ArcSegment.arc(tuple(c), r, b_start, b_end))
        prims.append(_cut_arc(cc1, s, p1lo, p1hi, c))
        loops.append(_closed(prims))
    outer = _closed([ArcSegment.arc(O, 1.0, 0.0, TWO_PI)])
    params = {"n": n, "rho": rho, "r": r, "cut_radius": s, "cut_mode": cut_mode}
    return CondenserSpec((outer,), None, tuple(loops), "tangent_disks", params)


def _cut_arc(cc, s, p_from, p_to, disk_center) -> ArcSegment:
    """Arc of the cutting circle from ``p_from`` to ``p_to`` inside the disk."""
    a0 = math.atan2(p_from[1] - cc[1], p_from[0] - cc[0])
    a1 = math.atan2(p_to[1] - cc[1], p_to[0] - cc[0])
    inward = math.atan2(disk_center[1] - cc[1], disk_center[0] - cc[0])
    # choose the sweep direction whose midpoint points into the disk
    for sweep in ((a1 - a0) % TWO_PI, (a1 - a0) % TWO_PI - TWO_PI):
        midang = a0 + sweep / 2
        if math.cos(midang - inward) > 0:
            return ArcSegment.arc(tuple(cc), s, a0, a0 + sweep)
    raise GeometryError("could not orient cutting arc")  # pragma: no cover


# ---------------------------------------------------------------------------
# circular arc triangle


@dataclass(frozen=True)
class ArcTriangle:
    theta: float
    u: complex
    v: complex
    w: complex
    beta: float
    S1: ArcSegment
    S2: ArcSegment
    S3: ArcSegment

    @property
    def s1_radius(self) -> float:
        return self.u.imag

    @property
    def s3_radius(self) -> float:
        return abs(self.v - self.w)


def arc_triangle(theta: float) -> ArcTriangle:
    """Cusp triangle between two circles tangent at 1, closed by a third arc."""
    if not 0 < theta <= math.pi / 6 + 1e-15:
        raise GeometryError("theta must lie in (0, pi/6]")
    e = complex(math.cos(theta), math.sin(theta))
    u = e / math.cos(theta)
    v = u + e * u.imag
    # tangent at v has direction i*v; intersect with the real axis
    t = -v.imag / v.real
    w = complex((v + t * 1j * v).real, 0.0)
    beta = math.atan2((v - w).imag, (v - w).real)
    # S3 meets S1 at a right angle at v: (v - w) is perpendicular to (v - u)
    dot = ((v - w) * (v - u).conjugate()).real
    if abs(dot) > 1e-12 * abs(v - w) * abs(v - u):
        raise GeometryError("tangent construction of the third side failed")
    R = u.imag
    S1 = ArcSegment.arc((u.real, u.imag), R, 1.5 * math.pi, TWO_PI + theta)
    S2 = ArcSegment.arc((u.real, -u.imag), R, -1.5 * math.pi, -TWO_PI - theta)
    S3 = ArcSegment.arc((w.real, 0.0), abs(v - w), TWO_PI - beta, TWO_PI + beta)
    return ArcTriangle(theta, u, v, w, beta, S1, S2, S3)


def cut_subarc(theta: float, s: float) -> tuple[float, ArcSegment]:
    """Part of S1 inside the cutting disk of radius ``s`` through the cusp."""
    tri = arc_triangle(theta)
    if not 0 < s < tri.s3_radius / 3:
        raise GeometryError("cut radius must satisfy 0 < s < |v - w|/3")
    theta2 = 2.0 * math.atan(s / tri.u.imag)
    sub = ArcSegment.arc(tri.S1.center, tri.S1.radius, 1.5 * math.pi, 1.5 * math.pi + theta2)
    return theta2, sub


def build(family: str, **params: Any) -> CondenserSpec:
    """Dispatch to a builder by family name (dashes or underscores)."""
    fam = family.replace("-", "_")
    if fam == "square_maze":
        return build_square_maze(params["m"])
    if fam == "circular_maze":
        return build_circular_maze(params["m"])
    if fam == "spiked_annulus":
        keys = ("r0", "r1", "l0", "l1")
        return build_spiked_annulus(params["M"], **{k: params[k] for k in keys if params.get(k) is not None})
    if fam == "tangent_disks":
        return build_tangent_disks(
            params["n"], params.get("rho"), params.get("cut_radius", 0.0), params.get("cut_mode", "centered")
        )
    if fam == "annulus":
        return annulus_spec(params.get("r0", 0.25), params.get("r1", 1.0))
    raise GeometryError(f"unknown family {family!r}")
