import math

import numpy as np
import pytest

from mazecap import geometry as g
from mazecap import mesh as ms


def unit_square_pslg():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    segs = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])
    return ms.Pslg(
        points=pts,
        segments=segs,
        segment_tags=np.array([ms.EDGE_OUTER] * 3 + [ms.EDGE_COMPACT]),
        segment_curves=np.full(4, -1),
        curves=np.zeros((0, 3)),
        holes=np.zeros((0, 2)),
    )


def min_angles(mesh):
    p = mesh.vertices[mesh.triangles]
    out = []
    for k in range(3):
        a, b, c = p[:, k], p[:, (k + 1) % 3], p[:, (k + 2) % 3]
        u, v = b - a, c - a
        cos = (u * v).sum(1) / np.linalg.norm(u, axis=1) / np.linalg.norm(v, axis=1)
        out.append(np.degrees(np.arccos(np.clip(cos, -1, 1))))
    return np.min(out, axis=0)


def test_unit_square_triangulation():
    mesh = ms.triangulate(unit_square_pslg(), max_area=0.5)
    assert mesh.n_triangles >= 2
    np.testing.assert_allclose(mesh.areas().sum(), 1.0, rtol=1e-14)
    assert mesh.areas().max() <= 0.5
    assert min_angles(mesh).min() >= 20.0
    assert mesh.euler_characteristic() == 1


def test_crossing_constraints_rejected():
    p = unit_square_pslg()
    p.segments = np.concatenate([p.segments, [[0, 2], [1, 3]]])
    p.segment_tags = np.concatenate([p.segment_tags, [ms.EDGE_WALL] * 2])
    p.segment_curves = np.concatenate([p.segment_curves, [-1, -1]])
    with pytest.raises(ms.MeshError):
        ms.triangulate(p, 0.1)


@pytest.mark.parametrize(
    "spec,chi",
    [(g.build_square_maze(5), 1), (g.build_circular_maze(4), 1), (g.annulus_spec(), 0), (g.build_spiked_annulus(6), 0)],
)
def test_euler_characteristic(spec, chi):
    mesh = ms.build_mesh(spec)
    mesh.check()
    assert mesh.euler_characteristic() == chi


def test_spike_tips_are_vertices():
    m = 7
    mesh = ms.build_mesh(g.build_square_maze(m))
    tips = [(1 - 1 / m, k / m) if k % 2 else (1 / m, k / m) for k in range(1, m)]
    for tip in tips:
        assert np.min(np.linalg.norm(mesh.vertices - tip, axis=1)) < 1e-14


def test_corner_points_square_maze():
    m = 7
    c = ms.corner_points(g.build_square_maze(m))
    tips = {(round(1 - 1 / m, 12), round(k / m, 12)) if k % 2 else (round(1 / m, 12), round(k / m, 12)) for k in range(1, m)}
    got = {(round(x, 12), round(y, 12)) for x, y in c}
    assert tips <= got
    # tips, both chain ends and the 2(m-1) chain kinks
    assert len(c) == (m - 1) + 2 + 2 * (m - 1)


def test_discretize_square_maze_ignores_chord_tol():
    spec = g.build_square_maze(7)
    a = ms.discretize_boundary(spec, chord_tol=1e-2)
    b = ms.discretize_boundary(spec, chord_tol=1e-4)
    assert len(a.points) == len(b.points)


def test_discretize_chord_deviation():
    spec = g.build_circular_maze(5)
    tol = 1e-3
    p = ms.discretize_boundary(spec, chord_tol=tol)
    mids = 0.5 * (p.points[p.segments[:, 0]] + p.points[p.segments[:, 1]])
    curved = p.segment_curves >= 0
    cx, cy, r = p.curves[p.segment_curves[curved]].T
    sag = r - np.hypot(mids[curved, 0] - cx, mids[curved, 1] - cy)
    assert sag.max() <= tol
    # polyline vertices are on the true arcs
    allp = g.pack_primitives(spec.outer_primitives() + spec.compact_primitives())
    assert g.primitive_distance(p.points, allp).max() < 1e-12


def test_discretize_rejects_coarse_chord_tol():
    with pytest.raises(ms.MeshError):
        ms.discretize_boundary(g.build_circular_maze(5), chord_tol=0.5)


def test_refine_corners_identity_and_bad_q():
    mesh = ms.build_mesh(g.build_square_maze(3), levels=0)
    assert ms.refine_corners(mesh, [[0.5, 0.5]], q=0.15, levels=0) is mesh
    with pytest.raises(ms.MeshError):
        ms.refine_corners(mesh, [[0.5, 0.5]], q=1.5, levels=2)


def test_refine_corners_grades_towards_tip():
    m = 3
    spec = g.build_square_maze(m)
    coarse = ms.build_mesh(spec, levels=0)
    tip = np.array([1 - 1 / m, 1 / m])
    q, L, R = 0.15, 8, 1 / (2 * m)
    graded = ms.refine_corners(coarse, [tip], q=q, levels=L, radius=R)
    graded.check()
    assert graded.n_vertices > coarse.n_vertices
    # longest edge among triangles touching the tip
    i = int(np.argmin(np.linalg.norm(graded.vertices - tip, axis=1)))
    tris = graded.triangles[(graded.triangles == i).any(axis=1)]
    p = graded.vertices[tris]
    diam = max(np.linalg.norm(p[:, a] - p[:, b], axis=1).max() for a, b in ((0, 1), (1, 2), (2, 0)))
    target = R * q**L
    assert target / 4 < diam < 4 * target


def test_refine_uniform_preserves_geometry():
    spec = g.build_circular_maze(5)
    mesh = ms.build_mesh(spec)
    fine = ms.refine_uniform(mesh)
    fine.check()
    assert fine.n_triangles == 4 * mesh.n_triangles
    assert fine.level == mesh.level + 1
    np.testing.assert_allclose(fine.areas().sum(), mesh.areas().sum(), rtol=1e-3)
    kp = g.pack_primitives(spec.compact_primitives())
    comp = fine.vertices[fine.vertex_tags == ms.TAG_COMPACT]
    assert g.primitive_distance(comp, kp).max() < 1e-12
    bp = g.pack_primitives(spec.outer_primitives())
    outer = fine.vertices[fine.vertex_tags == ms.TAG_OUTER]
    assert g.primitive_distance(outer, bp).max() < 1e-12


def test_mesh_text_round_trip_bit_exact():
    mesh = ms.refine_uniform(ms.build_mesh(g.build_tangent_disks(6, 0.6)))
    text = mesh.to_text()
    back = ms.Mesh.from_text(text)
    assert back.to_text() == text
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    np.testing.assert_array_equal(back.holes, mesh.holes)
    assert back.level == 1


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.replace("mazecap-mesh 1", "mazecap-mesh 2", 1),
        lambda t: t.replace("mazecap-mesh", "other", 1),
        lambda t: "\n".join(t.splitlines()[:-3]),
        lambda t: t.replace(t.splitlines()[2], "x y z", 1),
    ],
)
def test_mesh_text_rejects_malformed(mutate):
    text = ms.build_mesh(g.annulus_spec()).to_text()
    with pytest.raises(ms.MeshError):
        ms.Mesh.from_text(mutate(text))


def test_build_mesh_quality_without_corners():
    mesh = ms.build_mesh(g.annulus_spec())
    assert min_angles(mesh).min() >= 20.0
    assert not mesh.degenerate().any()
    # straight-sided triangles see the inscribed polygons of both circles
    n = round(2 * math.pi / ms.MAX_ARC_PIECE)
    polygon = 0.5 * n * math.sin(2 * math.pi / n) * (1 - 1 / 16)
    np.testing.assert_allclose(mesh.areas().sum(), polygon, rtol=1e-12)
