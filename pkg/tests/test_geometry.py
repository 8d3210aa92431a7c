import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mazecap import geometry as g
from mazecap._accel import numba_enabled


def count_slits(spec):
    n = 0
    for loop in spec.outer:
        segs = loop.segments
        for a, b in zip(segs, segs[1:] + segs[:1]):
            if a.kind == b.kind == "segment" and np.allclose(a.p0, b.p1) and np.allclose(a.p1, b.p0):
                n += 1
    return n


def test_arc_segment_geometry():
    s = g.ArcSegment.segment((0, 0), (3, 4))
    assert s.length == 5.0
    np.testing.assert_allclose(s.point_at(0.5), (1.5, 2.0))
    a = g.ArcSegment.arc((0, 0), 2.0, 0.0, math.pi)
    assert a.orientation == "ccw"
    np.testing.assert_allclose(a.length, 2 * math.pi)
    np.testing.assert_allclose(a.end, (-2.0, 0.0), atol=1e-15)
    r = a.reversed()
    np.testing.assert_allclose(r.start, a.end)
    assert r.orientation == "cw"


def test_segment_round_trip():
    for s in (g.ArcSegment.segment((0.1, 0.2), (0.3, -1)), g.ArcSegment.arc((1, 1), 0.5, 0.3, -2.0)):
        assert g.ArcSegment.from_dict(s.to_dict()) == s


@pytest.mark.parametrize("m", [3, 7, 14])
def test_square_maze_structure(m):
    spec = g.build_square_maze(m)
    assert count_slits(spec) == m - 1
    d = g.validate_spec(spec)
    assert d.valid, d.violations
    np.testing.assert_allclose(d.clearance, 1 / (2 * m), rtol=1e-10)
    np.testing.assert_allclose(g.domain_area(spec), 1.0, rtol=1e-14)


@pytest.mark.parametrize("M", [6, 10, 16])
def test_spiked_annulus_spike_count(M):
    spec = g.build_spiked_annulus(M)
    assert count_slits(spec) == M
    assert g.validate_spec(spec).valid


@pytest.mark.parametrize("m", [3, 5, 10])
def test_circular_maze_valid(m):
    spec = g.build_circular_maze(m)
    d = g.validate_spec(spec)
    assert d.valid, d.violations
    assert d.clearance > 0
    np.testing.assert_allclose(g.domain_area(spec), math.pi, rtol=1e-12)


def test_gap_angles():
    a = g.circular_maze_gap_angles(5)
    np.testing.assert_allclose(a[1], 2 * math.asin(1 / 7))
    np.testing.assert_allclose(a[-1], math.pi / 3)


@pytest.mark.parametrize("bad", [("square_maze", {"m": 2}), ("circular_maze", {"m": 1}), ("spiked_annulus", {"M": 7})])
def test_builders_reject(bad):
    fam, p = bad
    with pytest.raises(g.GeometryError):
        g.build(fam, **p)


def test_tangent_disks_and_cuts():
    spec = g.build_tangent_disks(6, 0.6)
    assert len(spec.compact_region) == 6  # one hole loop per disk
    assert g.validate_spec(spec).valid
    cut = g.build_tangent_disks(6, 0.6, cut_radius=0.05)
    assert g.validate_spec(cut).valid
    # cutting removes material, so the compact set shrinks
    a0 = abs(sum(g.signed_area(c) for c in spec.compact_region))
    a1 = abs(sum(g.signed_area(c) for c in cut.compact_region))
    assert a1 < a0


def test_spec_json_round_trip_is_byte_identical():
    for spec in (g.build_square_maze(5), g.build_circular_maze(4), g.build_tangent_disks(6, 0.5, 0.02), g.annulus_spec()):
        text = spec.to_json()
        again = g.CondenserSpec.from_json(text)
        assert again.to_json() == text


def test_spec_json_rejects_bad_documents():
    with pytest.raises(g.GeometryError):
        g.CondenserSpec.from_json("{not json")
    d = g.build_square_maze(3).to_dict()
    d["version"] = 99
    with pytest.raises(g.GeometryError):
        g.CondenserSpec.from_dict(d)


def test_validate_detects_touching_compact():
    chain = g.Chain((g.ArcSegment.segment((0.0, 0.0), (1.0, 0.0)),))
    d = g.validate_spec(g.unit_disk_spec(chain))
    assert not d.valid


def test_contains_and_distance():
    spec = g.annulus_spec()
    assert g.contains(spec, (0.5, 0.0))
    assert not g.contains(spec, (1.5, 0.0))
    np.testing.assert_allclose(g.distance_to_boundary(spec, (0.5, 0.0)), 0.5, rtol=1e-14)


def test_arc_triangle_tangency():
    for th in (math.pi / 24, math.pi / 12, math.pi / 6):
        t = g.arc_triangle(th)
        # S3 meets S1 orthogonally at v
        np.testing.assert_allclose(((t.v - t.w) * (t.v - t.u).conjugate()).real, 0.0, atol=1e-12)


def test_distance_kernels_agree():
    spec = g.build_circular_maze(5)
    packed = g.pack_primitives(spec.outer_primitives())
    pts = np.random.default_rng(1).uniform(-1, 1, (500, 2))
    np.testing.assert_allclose(g._distance_kernel(pts, packed), g._distance_numpy(pts, packed), rtol=1e-13, atol=1e-15)


def test_numba_flag(monkeypatch):
    monkeypatch.setenv("MAZECAP_DISABLE_NUMBA", "1")
    assert not numba_enabled()
    spec = g.build_square_maze(5)
    slow = g.distance_to_boundary(spec, np.array([[0.5, 0.5], [0.3, 0.1]]))
    monkeypatch.setenv("MAZECAP_DISABLE_NUMBA", "0")
    fast = g.distance_to_boundary(spec, np.array([[0.5, 0.5], [0.3, 0.1]]))
    np.testing.assert_allclose(slow, fast, rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 3.0),
    st.floats(-math.pi, math.pi),
    st.floats(0.1, 2 * math.pi),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_arc_distance_matches_sampling(r, a0, sweep, px, py):
    arc = g.ArcSegment.arc((0.0, 0.0), r, a0, a0 + sweep)
    d = float(arc.distance(np.array([[px, py]]))[0])
    brute = np.hypot(*(arc.point_at(np.linspace(0, 1, 20001)) - (px, py)).T).min()
    assert d <= brute + 1e-12
    assert brute - d <= r * sweep / 20000
