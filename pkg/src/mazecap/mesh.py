"""Conforming triangulations of condenser domains.

Boundary arcs become polylines whose vertices lie exactly on the arcs.
Every constraint edge remembers the arc it approximates (``curve`` id, -1
for straight pieces) so that later refinement can snap new vertices back
onto the true geometry and quadratic elements can bend their edges.

Walls and the 1D compact chain are ordinary interior constraint edges. The
potential is prescribed on them (0 on walls, 1 on the compact set) so a
single vertex sheet carries both one-sided traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import triangle

from .geometry import ArcSegment, CondenserSpec, GeometryError, compact_clearance

TAG_INTERIOR, TAG_OUTER, TAG_COMPACT = 0, 1, 2
EDGE_OUTER, EDGE_WALL, EDGE_COMPACT = 1, 2, 3
AREA_EPS = 1e-12  # relative to the squared longest edge
MESH_FORMAT_VERSION = 1
MAX_ARC_PIECE = math.pi / 12


class MeshError(RuntimeError):
    """Meshing failed or produced an invalid mesh."""


@dataclass
class Pslg:
    points: np.ndarray
    segments: np.ndarray
    segment_tags: np.ndarray
    segment_curves: np.ndarray
    curves: np.ndarray
    holes: np.ndarray
    corners: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def check(self) -> None:
        n = len(self.points)
        if len(self.segments) and (self.segments.min() < 0 or self.segments.max() >= n):
            raise MeshError("constraint edge refers to a missing point")
        crossings = _crossing_segments(self.points, self.segments)
        if crossings:
            raise MeshError(f"constraint edges cross: {crossings[:3]}")


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    vertex_tags: np.ndarray
    edges: np.ndarray
    edge_tags: np.ndarray
    edge_curves: np.ndarray
    curves: np.ndarray
    level: int = 0
    holes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def unique_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """All mesh edges (sorted pairs) and the ``(T, 3)`` triangle-to-edge map.

        Local edge ``k`` of a triangle is opposite its vertex ``k``.
        """
        t = self.triangles
        e = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
        e.sort(axis=1)
        uniq, inv = np.unique(e, axis=0, return_inverse=True)
        return uniq, inv.reshape(3, -1).T

    def check(self) -> None:
        """Raise if the mesh is inverted, degenerate or non-conforming."""
        bad = self.degenerate()
        if bad.any():
            a = self.areas()[bad].min()
            raise MeshError(f"degenerate or inverted triangle (area {a:.3e})")
        edges, tmap = self.unique_edges()
        counts = np.bincount(tmap.ravel(), minlength=len(edges))
        if counts.max() > 2:
            raise MeshError("edge shared by more than two triangles")
        boundary = edges[counts == 1]
        used = np.zeros(self.n_vertices, bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise MeshError("mesh has unused vertices")
        # a hanging vertex would lie in the interior of a boundary edge
        if len(boundary) and len(boundary) < 200000:
            _check_no_hanging(self.vertices, boundary)

    def degenerate(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        l2 = np.max([((p[:, k] - p[:, k - 1]) ** 2).sum(axis=1) for k in range(3)], axis=0)
        return self.areas() <= AREA_EPS * l2

    def euler_characteristic(self) -> int:
        edges, _ = self.unique_edges()
        return self.n_vertices - len(edges) + self.n_triangles

    def to_text(self) -> str:
        lines = [f"mazecap-mesh {MESH_FORMAT_VERSION}"]
        lines.append(
            f"{self.n_vertices} {self.n_triangles} {len(self.edges)} {len(self.curves)}"
            f" {len(self.holes)} {self.level}"
        )
        for (x, y), tag in zip(self.vertices, self.vertex_tags):
            lines.append(f"{float(x)!r} {float(y)!r} {int(tag)}")
        for i, j, k in self.triangles:
            lines.append(f"{i} {j} {k}")
        for (i, j), tag, c in zip(self.edges, self.edge_tags, self.edge_curves):
            lines.append(f"{i} {j} {int(tag)} {int(c)}")
        for cx, cy, r in self.curves:
            lines.append(f"{float(cx)!r} {float(cy)!r} {float(r)!r}")
        for x, y in self.holes:
            lines.append(f"{float(x)!r} {float(y)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Mesh":
        rows = text.splitlines()
        try:
            head = rows[0].split()
            if head[0] != "mazecap-mesh":
                raise MeshError("not a mazecap mesh file")
            if int(head[1]) != MESH_FORMAT_VERSION:
                raise MeshError(f"unsupported mesh format version {head[1]}")
            nv, nt, ne, nc, nh, level = map(int, rows[1].split())
            spans = np.cumsum([2, nv, nt, ne, nc, nh])
            if len(rows) != spans[-1]:
                raise MeshError("mesh file length does not match its header")
            block = lambda k: [r.split() for r in rows[spans[k] : spans[k + 1]]]
            v, t, e, c, h = (block(k) for k in range(5))
            return cls(
                vertices=np.array([[float(x[0]), float(x[1])] for x in v]).reshape(-1, 2),
                triangles=np.array(t, dtype=np.int64).reshape(-1, 3),
                vertex_tags=np.array([int(x[2]) for x in v], dtype=np.int64),
                edges=np.array([[int(x[0]), int(x[1])] for x in e], dtype=np.int64).reshape(-1, 2),
                edge_tags=np.array([int(x[2]) for x in e], dtype=np.int64),
                edge_curves=np.array([int(x[3]) for x in e], dtype=np.int64),
                curves=np.array(c, dtype=float).reshape(-1, 3),
                level=level,
                holes=np.array(h, dtype=float).reshape(-1, 2),
            )
        except (IndexError, ValueError) as exc:
            raise MeshError(f"malformed mesh file: {exc}") from exc


def _check_no_hanging(vertices, boundary_edges):
    p = vertices[boundary_edges[:, 0]]
    q = vertices[boundary_edges[:, 1]]
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    ends = set(map(tuple, boundary_edges.tolist()))
    del ends
    # bucket vertices to keep this linear-ish
    order = np.argsort(vertices[:, 0])
    xs = vertices[order, 0]
    for k in range(len(boundary_edges)):
        a, b = boundary_edges[k]
        i0 = np.searchsorted(xs, lo[k, 0] - 1e-14)
        i1 = np.searchsorted(xs, hi[k, 0] + 1e-14, side="right")
        cand = order[i0:i1]
        cand = cand[(cand != a) & (cand != b)]
        if not len(cand):
            continue
        c = vertices[cand]
        inside = np.all((c >= lo[k] - 1e-14) & (c <= hi[k] + 1e-14), axis=1)
        if not inside.any():
            continue
        d = q[k] - p[k]
        cr = np.abs(d[0] * (c[inside, 1] - p[k, 1]) - d[1] * (c[inside, 0] - p[k, 0]))
        if (cr <= 1e-13 * np.dot(d, d)).any():
            raise MeshError("hanging vertex on a boundary edge")


# ---------------------------------------------------------------------------
# boundary discretisation


def _prim_key(s: ArcSegment):
    """Orientation-free key identifying a primitive's point set."""
    r = lambda v: round(v, 11)
    if s.kind == "segment":
        a, b = sorted([(r(s.p0[0]), r(s.p0[1])), (r(s.p1[0]), r(s.p1[1]))])
        return ("s", a, b)
    lo = min(s.angle_start, s.angle_end) % (2 * math.pi)
    return ("a", r(s.center[0]), r(s.center[1]), r(s.radius), r(lo), r(abs(s.sweep)))


def _arc_pieces(s: ArcSegment, chord_tol: float, max_len: float | None) -> int:
    sweep = abs(s.sweep)
    if chord_tol >= s.radius:
        k = 4
    else:
        dmax = 2.0 * math.acos(1.0 - chord_tol / s.radius)
        k = math.ceil(sweep / dmax - 1e-12)
    # small arcs (radius below chord_tol) still get a fair polygon
    k = max(k, math.ceil(sweep / MAX_ARC_PIECE - 1e-12))
    if max_len is not None:
        k = max(k, math.ceil(s.length / max_len))
    # a full circle needs at least 4 pieces to stay a simple polygon
    return max(k, 4 if sweep > math.pi else 2 if sweep > math.pi / 2 else 1)


class _PointPool:
    def __init__(self, tol=1e-11):
        self.tol = tol
        self.pts: list[tuple[float, float]] = []
        self.index: dict[tuple[int, int], list[int]] = {}

    def add(self, p) -> int:
        x, y = float(p[0]), float(p[1])
        key = (round(x / self.tol), round(y / self.tol))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for i in self.index.get((key[0] + dx, key[1] + dy), ()):
                    q = self.pts[i]
                    if abs(q[0] - x) <= self.tol and abs(q[1] - y) <= self.tol:
                        return i
        self.pts.append((x, y))
        self.index.setdefault(key, []).append(len(self.pts) - 1)
        return len(self.pts) - 1


def _turn(a: ArcSegment, b: ArcSegment) -> float:
    """Signed turning angle from the end tangent of ``a`` to the start tangent of ``b``."""
    ta = _tangent(a, 1.0)
    tb = _tangent(b, 0.0)
    return math.atan2(ta[0] * tb[1] - ta[1] * tb[0], ta[0] * tb[0] + ta[1] * tb[1])


def _tangent(s: ArcSegment, t: float):
    if s.kind == "segment":
        d = np.subtract(s.p1, s.p0)
    else:
        ang = s.angle_start + t * s.sweep
        sign = 1.0 if s.sweep > 0 else -1.0
        d = sign * np.array([-math.sin(ang), math.cos(ang)])
    return d / np.linalg.norm(d)


def corner_points(spec: CondenserSpec, tol: float = 1e-9) -> np.ndarray:
    """Points where the potential is singular and the mesh should be graded.

    Reentrant corners of the outer loops (slit tips included), ends and
    kinks of a compact chain and kinks of compact region loops.
    """
    pts = []
    for loop in spec.outer:
        segs = loop.segments
        for i in range(len(segs)):
            a, b = segs[i], segs[(i + 1) % len(segs)]
            # ccw loop: domain on the left, interior angle pi - turn; a
            # reversal (slit tip) has turn +-pi depending on rounding
            turn = _turn(a, b)
            if turn < -tol or abs(abs(turn) - math.pi) < 1e-7:
                pts.append(a.end)
    # a cw inner loop has the domain on its left as well, same test applies
    if spec.compact_curve is not None:
        segs = spec.compact_curve.segments
        pts.append(segs[0].start)
        pts.append(segs[-1].end)
        for a, b in zip(segs, segs[1:]):
            if abs(_turn(a, b)) > tol:
                pts.append(a.end)
    else:
        # points where two loops touch are skipped: u = 1 on both sides of a
        # cusp, and grading into the cusp gap only produces slivers
        for loop in spec.compact_region:
            segs = loop.segments
            for i in range(len(segs)):
                a, b = segs[i], segs[(i + 1) % len(segs)]
                if abs(_turn(a, b)) > tol:
                    pts.append(a.end)
    if not pts:
        return np.zeros((0, 2))
    out = []
    for p in pts:
        if not any(math.dist(p, q) < 1e-10 for q in out):
            out.append(tuple(map(float, p)))
    return np.array(out)


def discretize_boundary(spec: CondenserSpec, chord_tol: float | None = None, max_len: float | None = None) -> Pslg:
    """Polyline PSLG of a spec; arcs are split until their sagitta is below ``chord_tol``."""
    clearance = compact_clearance(spec)
    if chord_tol is None:
        chord_tol = clearance / 20.0
    if chord_tol > clearance / 2.0:
        raise MeshError(
            f"chord_tol {chord_tol:g} exceeds half the clearance {clearance:g}"
        )
    pool = _PointPool()
    segs: list[tuple[int, int]] = []
    tags: list[int] = []
    curve_ids: list[int] = []
    curves: list[tuple[float, float, float]] = []
    curve_index: dict = {}

    def emit(s: ArcSegment, tag: int):
        if s.kind == "segment":
            k = 1 if max_len is None else max(1, math.ceil(s.length / max_len))
            cid = -1
        else:
            k = _arc_pieces(s, chord_tol, max_len)
            ckey = (round(s.center[0], 11), round(s.center[1], 11), round(s.radius, 11))
            if ckey not in curve_index:
                curve_index[ckey] = len(curves)
                curves.append((s.center[0], s.center[1], s.radius))
            cid = curve_index[ckey]
        t = np.linspace(0.0, 1.0, k + 1)
        pts = s.point_at(t)
        pts[0], pts[-1] = s.start, s.end
        ids = [pool.add(p) for p in pts]
        for a, b in zip(ids, ids[1:]):
            segs.append((a, b))
            tags.append(tag)
            curve_ids.append(cid)

    # outer loops: a primitive seen twice is a slit wall
    prims = spec.outer_primitives()
    keys = [_prim_key(s) for s in prims]
    counts: dict = {}
    for k in keys:
        counts[k] = counts.get(k, 0) + 1
    seen = set()
    for s, k in zip(prims, keys):
        if k in seen:
            continue
        seen.add(k)
        emit(s, EDGE_WALL if counts[k] > 1 else EDGE_OUTER)
    for s in spec.compact_primitives():
        emit(s, EDGE_COMPACT)

    holes = []
    if spec.compact_region is not None:
        for loop in spec.compact_region:
            holes.append(_interior_seed(loop))
    for loop in spec.outer[1:]:
        holes.append(_hole_seed_inner(loop))
    points = np.array(pool.pts)
    seg_arr = np.array(segs, dtype=np.int64)
    # drop duplicate constraint edges (shared polyline pieces)
    key = np.sort(seg_arr, axis=1)
    _, first = np.unique(key, axis=0, return_index=True)
    first.sort()
    pslg = Pslg(
        points=points,
        segments=seg_arr[first],
        segment_tags=np.array(tags, dtype=np.int64)[first],
        segment_curves=np.array(curve_ids, dtype=np.int64)[first],
        curves=np.array(curves, dtype=float).reshape(-1, 3),
        holes=np.array(holes, dtype=float).reshape(-1, 2),
        corners=corner_points(spec),
    )
    return pslg


def _interior_seed(loop) -> tuple[float, float]:
    """A point strictly inside a closed chain (for Triangle's hole seeds)."""
    from .geometry import _winding

    pts = loop.sample(16)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    c = 0.5 * (lo + hi)
    cand = [c]
    rng = np.random.default_rng(0)
    cand += list(lo + (hi - lo) * rng.random((2000, 2)))
    best, best_d = None, -1.0
    from .geometry import _pack, primitive_distance

    packed = _pack(loop.segments)
    for p in cand:
        if abs(_winding(loop, tuple(p))) > 0.5:
            d = float(primitive_distance(np.array([p]), packed)[0])
            if d > best_d:
                best, best_d = p, d
                if d > 0.25 * float(np.min(hi - lo)):
                    break
    if best is None:
        raise MeshError("could not find a seed point inside a compact loop")
    return (float(best[0]), float(best[1]))


def _hole_seed_inner(loop) -> tuple[float, float]:
    """Seed inside the hole bounded by an inner outer-loop (e.g. r < r0)."""
    from .geometry import _pack, primitive_distance

    arcs = [s for s in loop.segments if s.kind == "arc"]
    if arcs:
        c = np.array(arcs[0].center)
        if primitive_distance(c[None, :], _pack(loop.segments))[0] > 1e-9:
            return (float(c[0]), float(c[1]))
    return _interior_seed(loop)


def _crossing_segments(points, segments, limit=10):
    """Pairs of constraint edges that cross at interior points."""
    p = points[segments[:, 0]]
    q = points[segments[:, 1]]
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    order = np.argsort(lo[:, 0])
    out = []
    active: list[int] = []
    for idx in order:
        active = [a for a in active if hi[a, 0] >= lo[idx, 0] - 1e-14]
        for a in active:
            if set(segments[a]) & set(segments[idx]):
                continue
            if hi[a, 1] < lo[idx, 1] or hi[idx, 1] < lo[a, 1]:
                continue
            if _proper_cross(p[a], q[a], p[idx], q[idx]):
                out.append((int(a), int(idx)))
                if len(out) >= limit:
                    return out
        active.append(idx)
    return out


def _proper_cross(a, b, c, d):
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    scale = max(np.ptp([a[0], b[0], c[0], d[0]]), np.ptp([a[1], b[1], c[1], d[1]]), 1e-300)
    eps = 1e-14 * scale * scale
    d1, d2 = orient(c, d, a), orient(c, d, b)
    d3, d4 = orient(a, b, c), orient(a, b, d)
    if abs(d1) <= eps or abs(d2) <= eps or abs(d3) <= eps or abs(d4) <= eps:
        # touching or collinear overlap; treat overlap of collinear pieces as a crossing
        if abs(d1) <= eps and abs(d2) <= eps:
            t = np.dot(np.subtract(b, a), np.subtract(b, a))
            s0 = np.dot(np.subtract(c, a), np.subtract(b, a)) / t
            s1 = np.dot(np.subtract(d, a), np.subtract(b, a)) / t
            return max(min(s0, s1), 0.0) < min(max(s0, s1), 1.0) - 1e-12
        return False
    return (d1 > 0) != (d2 > 0) and (d3 > 0) != (d4 > 0)


# ---------------------------------------------------------------------------
# triangulation and refinement


def _mesh_from_triangle(out: dict, pslg_curves: np.ndarray, level: int = 0, holes=None) -> Mesh:
    verts = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    segs = np.asarray(out["segments"], dtype=np.int64).reshape(-1, 2)
    marks = np.asarray(out["segment_markers"], dtype=np.int64).ravel()
    tags = marks % 4
    cids = marks // 4 - 1
    keep = tags > 0
    segs, tags, cids = segs[keep], tags[keep], cids[keep]
    # Steiner points that fell in holes or outside stay unreferenced
    used = np.zeros(len(verts), dtype=bool)
    used[tris.ravel()] = True
    if not used.all():
        remap = np.cumsum(used) - 1
        verts, tris = verts[used], remap[tris]
        segs = remap[segs]
    vt = np.zeros(len(verts), dtype=np.int64)
    vt[segs[tags != EDGE_COMPACT].ravel()] = TAG_OUTER
    vt[segs[tags == EDGE_COMPACT].ravel()] = TAG_COMPACT
    holes = np.zeros((0, 2)) if holes is None else np.asarray(holes, dtype=float).reshape(-1, 2)
    mesh = Mesh(verts, tris, vt, segs, tags, cids, pslg_curves.copy(), level, holes)
    _snap_curved(mesh)
    return mesh


def _snap_curved(mesh: Mesh) -> None:
    """Project vertices of curved constraint edges onto their arcs.

    A projection that would invert an adjacent triangle is skipped.
    """
    curved = mesh.edge_curves >= 0
    if not curved.any():
        return
    vidx = mesh.edges[curved].ravel()
    cid = np.repeat(mesh.edge_curves[curved], 2)
    target = {}
    for v, c in zip(vidx.tolist(), cid.tolist()):
        target.setdefault(v, c)
    v = np.fromiter(target.keys(), dtype=np.int64)
    c = np.fromiter(target.values(), dtype=np.int64)
    cx, cy, r = mesh.curves[c].T
    d = mesh.vertices[v] - np.stack([cx, cy], axis=1)
    nrm = np.linalg.norm(d, axis=1)
    moved = np.stack([cx, cy], axis=1) + d * (r / nrm)[:, None]
    shift = np.linalg.norm(moved - mesh.vertices[v], axis=1)
    need = shift > 0
    if not need.any():
        return
    old = mesh.vertices.copy()
    mesh.vertices[v[need]] = moved[need]
    bad = mesh.degenerate()
    if bad.any():
        # revert vertices of inverted triangles
        revert = np.unique(mesh.triangles[bad].ravel())
        mesh.vertices[revert] = old[revert]


def triangulate_points(pslg: Pslg, min_angle: float = 25.0) -> Mesh:
    """Quality triangulation sized by the PSLG points alone (no area bound)."""
    return triangulate(pslg, None, min_angle)


def triangulate(pslg: Pslg, max_area: float | None, min_angle: float = 25.0) -> Mesh:
    """Constrained quality triangulation respecting every PSLG edge."""
    pslg.check()
    markers = pslg.segment_tags + 4 * (pslg.segment_curves + 1)
    data = {
        "vertices": pslg.points,
        "segments": pslg.segments,
        "segment_markers": markers.reshape(-1, 1),
    }
    if len(pslg.holes):
        data["holes"] = pslg.holes
    opts = f"pq{min_angle:g}" + ("" if max_area is None else f"a{max_area:.17g}")
    try:
        out = triangle.triangulate(data, opts)
    except Exception as exc:  # triangle raises bare RuntimeError
        raise MeshError(f"Triangle failed: {exc}") from exc
    if "triangles" not in out or not len(out["triangles"]):
        raise MeshError("triangulation is empty (is the domain closed?)")
    mesh = _mesh_from_triangle(out, pslg.curves, holes=pslg.holes)
    mesh.check()
    return mesh


def grading_size(points: np.ndarray, corners: np.ndarray, radius: np.ndarray, q: float, levels: int) -> np.ndarray:
    """Target edge length of the layered grading around ``corners``.

    Layer ``j`` is the ring ``radius*q**(j+1) <= r < radius*q**j``; its
    elements have size about ``radius*q**j*(1-q)``; inside the innermost
    radius the size is ``radius*q**levels``.
    """
    size = np.full(len(points), np.inf)
    for c, R in zip(corners, radius):
        d = np.linalg.norm(points - c, axis=1)
        with np.errstate(divide="ignore"):
            j = np.floor(np.log(np.maximum(d, 1e-300) / R) / math.log(q))
        j = np.clip(j, 0, levels)
        h = np.where(j >= levels, R * q**levels, R * q**j * (1.0 - q))
        h = np.where(d >= R, np.inf, h)
        size = np.minimum(size, h)
    return size


def _point_segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(n,)`` distance from each point to the nearest of the segments ``a_i b_i``."""
    out = np.full(len(pts), np.inf)
    ab = b - a
    ll = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    for start in range(0, len(pts), 256):
        p = pts[start : start + 256]
        ap = p[:, None, :] - a[None]
        t = np.clip(np.einsum("nij,ij->ni", ap, ab) / ll, 0.0, 1.0)
        d = np.linalg.norm(ap - t[..., None] * ab[None], axis=2)
        out[start : start + 256] = d.min(axis=1)
    return out


def grade_pslg(
    pslg: Pslg,
    q: float = 0.15,
    levels: int = 6,
    radius: float | np.ndarray | None = None,
) -> Pslg:
    """Geometric grading by construction: ``levels`` rings shrinking by ``q``.

    Constraint edges are split where they cross the ring circles and each
    ring carries a few Steiner points, so one quality triangulation yields
    elements of about ``R*q**j*(1-q)`` in ring ``j``.
    """
    if not 0 < q < 1:
        raise MeshError("grading factor q must lie in (0, 1)")
    corners = np.asarray(pslg.corners, dtype=float).reshape(-1, 2)
    if levels == 0 or not len(corners):
        return pslg
    pts = pslg.points
    if radius is None:
        lens = np.linalg.norm(pts[pslg.segments[:, 0]] - pts[pslg.segments[:, 1]], axis=1)
        radius = np.array([2.0 * lens.max()] * len(corners))
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (len(corners),)).copy()
    rings = [(c, R * q**j) for c, R in zip(corners, radius) for j in range(levels + 1)]

    def size_at(x):
        return grading_size(np.atleast_2d(x), corners, radius, q, levels)

    new_pts = [p for p in pts]
    segs, tags, cids = [], [], []
    for (i0, i1), tag, cid in zip(pslg.segments, pslg.segment_tags, pslg.segment_curves):
        p0, p1 = pts[i0], pts[i1]
        d = p1 - p0
        L = float(np.hypot(*d))
        ts = []
        for c, r in rings:
            f = p0 - c
            qa, qb, qc = L * L, 2.0 * float(f @ d), float(f @ f) - r * r
            disc = qb * qb - 4 * qa * qc
            if disc <= 0:
                continue
            sq = math.sqrt(disc)
            for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
                if 0.0 < t < 1.0:
                    ts.append(t)
        keep = [0.0]
        for t in sorted(ts) + [1.0]:
            x = p0 + t * d
            h = min(float(size_at(x)[0]), float(size_at(p0 + keep[-1] * d)[0]))
            if (t - keep[-1]) * L < 0.3 * min(h, L):
                if t == 1.0 and len(keep) > 1:
                    keep[-1] = 1.0
                continue
            keep.append(t)
        if keep[-1] != 1.0:
            keep.append(1.0)
        ids = [int(i0)]
        for t in keep[1:-1]:
            x = p0 + t * d
            if cid >= 0:
                cx, cy, r = pslg.curves[cid]
                x = np.array([cx, cy]) + (x - [cx, cy]) * (r / np.hypot(x[0] - cx, x[1] - cy))
            new_pts.append(x)
            ids.append(len(new_pts) - 1)
        ids.append(int(i1))
        for a_, b_ in zip(ids, ids[1:]):
            segs.append((a_, b_))
            tags.append(tag)
            cids.append(cid)
    new_pts = np.array(new_pts)
    segs = np.array(segs, dtype=np.int64)

    # Steiner rings; points too close to a constraint or to each other are dropped
    nring = max(6, math.ceil(2.0 * math.pi / (1.0 - q)))
    cand = []
    for c, R in zip(corners, radius):
        for j in range(1, levels + 1):
            r = R * q**j
            ang = np.arange(nring) * (2.0 * math.pi / nring) + 0.5 * j
            cand.append(c + r * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    cand = np.concatenate(cand)
    h = size_at(cand)
    dseg = _point_segment_distance(cand, new_pts[segs[:, 0]], new_pts[segs[:, 1]])
    ok = dseg > 0.45 * h
    if len(new_pts):
        from scipy.spatial import cKDTree

        dpt, _ = cKDTree(new_pts).query(cand)
        ok &= dpt > 0.5 * h
    steiner: list[np.ndarray] = []
    for p, hp in zip(cand[ok], h[ok]):
        if steiner and np.min(np.linalg.norm(np.array(steiner) - p, axis=1)) < 0.5 * hp:
            continue
        steiner.append(p)
    if steiner:
        new_pts = np.concatenate([new_pts, np.array(steiner)])
    return Pslg(
        points=new_pts,
        segments=segs,
        segment_tags=np.array(tags, dtype=np.int64),
        segment_curves=np.array(cids, dtype=np.int64),
        curves=pslg.curves,
        holes=pslg.holes,
        corners=corners,
    )


def refine_corners(
    mesh: Mesh,
    corners: np.ndarray,
    q: float = 0.15,
    levels: int = 6,
    radius: float | np.ndarray | None = None,
    min_angle: float = 25.0,
) -> Mesh:
    """Grade an existing mesh towards ``corners`` with ``levels`` layers shrinking by ``q``.

    All current vertices are kept; ring points are added and the domain is
    triangulated again with the same constraint edges and hole seeds.
    """
    if not 0 < q < 1:
        raise MeshError("grading factor q must lie in (0, 1)")
    corners = np.asarray(corners, dtype=float).reshape(-1, 2)
    if levels == 0 or not len(corners):
        return mesh
    pslg = Pslg(
        points=mesh.vertices.copy(),
        segments=mesh.edges.copy(),
        segment_tags=mesh.edge_tags.copy(),
        segment_curves=mesh.edge_curves.copy(),
        curves=mesh.curves,
        holes=mesh.holes,
        corners=corners,
    )
    graded = grade_pslg(pslg, q, levels, radius)
    out = triangulate_points(graded, min_angle)
    out.level = mesh.level
    return out


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: split every triangle in four at its edge midpoints.

    Midpoints of curved constraint edges are projected onto their arcs.
    """
    edges, tmap = mesh.unique_edges()
    nv = mesh.n_vertices
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    mid_tag = np.zeros(len(edges), dtype=np.int64)

    ckey = np.sort(mesh.edges, axis=1)
    # locate each constraint edge among the unique edges
    eidx = _edge_lookup(edges, ckey)
    if np.any(eidx < 0):
        raise MeshError("constraint edge is not a mesh edge")
    curved = mesh.edge_curves >= 0
    if curved.any():
        ce = eidx[curved]
        cx, cy, r = mesh.curves[mesh.edge_curves[curved]].T
        cen = np.stack([cx, cy], axis=1)
        d = mid[ce] - cen
        mid[ce] = cen + d * (r / np.linalg.norm(d, axis=1))[:, None]
    mid_tag[eidx] = np.where(mesh.edge_tags == EDGE_COMPACT, TAG_COMPACT, TAG_OUTER)

    verts = np.concatenate([mesh.vertices, mid])
    vtags = np.concatenate([mesh.vertex_tags, mid_tag])
    t = mesh.triangles
    m0, m1, m2 = (nv + tmap[:, 0], nv + tmap[:, 1], nv + tmap[:, 2])
    # m_k is opposite vertex k
    tris = np.concatenate(
        [
            np.stack([t[:, 0], m2, m1], axis=1),
            np.stack([m2, t[:, 1], m0], axis=1),
            np.stack([m1, m0, t[:, 2]], axis=1),
            np.stack([m0, m1, m2], axis=1),
        ]
    )
    new_mid = nv + eidx
    e_new = np.concatenate(
        [np.stack([mesh.edges[:, 0], new_mid], axis=1), np.stack([new_mid, mesh.edges[:, 1]], axis=1)]
    )
    out = Mesh(
        verts,
        tris,
        vtags,
        e_new,
        np.concatenate([mesh.edge_tags, mesh.edge_tags]),
        np.concatenate([mesh.edge_curves, mesh.edge_curves]),
        mesh.curves.copy(),
        mesh.level + 1,
        mesh.holes.copy(),
    )
    if out.degenerate().any():
        raise MeshError("uniform refinement produced an inverted triangle")
    return out


def _edge_lookup(edges: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Row index of each sorted ``query`` pair in the sorted unique ``edges``."""
    n = int(max(edges.max(), query.max())) + 1
    ek = edges[:, 0] * n + edges[:, 1]
    qk = query[:, 0] * n + query[:, 1]
    pos = np.searchsorted(ek, qk)
    pos = np.clip(pos, 0, len(ek) - 1)
    return np.where(ek[pos] == qk, pos, -1)


def build_mesh(
    spec: CondenserSpec,
    max_area: float | None = None,
    chord_tol: float | None = None,
    q: float = 0.15,
    levels: int = 6,
    grading_radius: float | None = None,
    min_angle: float = 25.0,
) -> Mesh:
    """Discretise, triangulate and grade a spec with sensible defaults."""
    clearance = compact_clearance(spec)
    if max_area is None:
        h = clearance / 2.0
        max_area = (math.sqrt(3) / 4.0) * h * h
    pslg = discretize_boundary(spec, chord_tol, max_len=None)
    if grading_radius is None:
        grading_radius = clearance
    pslg = grade_pslg(pslg, q, levels, grading_radius)
    return triangulate(pslg, max_area, min_angle)
