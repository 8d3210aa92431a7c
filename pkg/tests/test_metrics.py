import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mazecap import geometry as g
from mazecap import metrics as mt


def test_halfplane_distance_examples():
    assert mt.hyperbolic_distance_halfplane((0, 1), (0, 1)) == 0.0
    np.testing.assert_allclose(mt.hyperbolic_distance_halfplane((0, 1), (0, math.e)), 1.0, rtol=1e-14)
    np.testing.assert_allclose(mt.hyperbolic_distance_halfplane((0, 1), (1, 1)), math.acosh(1.5), rtol=1e-14)
    with pytest.raises(ValueError):
        mt.hyperbolic_distance_halfplane((0, 0), (0, 1))


def test_disk_distance_examples():
    assert mt.hyperbolic_distance_disk((0, 0), (0, 0)) == 0.0
    t = 0.7
    np.testing.assert_allclose(mt.hyperbolic_distance_disk((0, 0), (t, 0)), math.log((1 + t) / (1 - t)), rtol=1e-14)
    np.testing.assert_allclose(mt.hyperbolic_distance_disk((0.5, 0), (-0.5, 0)), 2 * math.log(3), rtol=1e-14)
    with pytest.raises(ValueError):
        mt.hyperbolic_distance_disk((1.0, 0.0), (0, 0))


point_in_disk = st.tuples(st.floats(0, 0.999), st.floats(0, 2 * math.pi)).map(
    lambda p: (p[0] * math.cos(p[1]), p[0] * math.sin(p[1]))
)


@settings(max_examples=200, deadline=None)
@given(point_in_disk, point_in_disk)
def test_disk_formulas_agree(x, y):
    a = mt.hyperbolic_distance_disk(x, y)
    b = mt.hyperbolic_distance_disk_tanh(x, y)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(a, mt.hyperbolic_distance_disk(y, x), rtol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.999), st.floats(0, 0.999), st.floats(0, 2 * math.pi))
def test_disk_inequality_on_radial_pairs(s, t, phi):
    s, t = sorted((s, t))
    x = (s * math.cos(phi), s * math.sin(phi))
    y = (t * math.cos(phi), t * math.sin(phi))
    rho = mt.hyperbolic_distance_disk(x, y)
    k = math.log((1 - s) / (1 - t))  # radial segment is a quasihyperbolic geodesic
    assert rho <= 2 * k * (1 + 1e-12) + 1e-15
    assert 2 * k <= 4 * rho * (1 + 1e-12) + 1e-15


def test_qh_disk_radial():
    assert mt.qh_disk_radial(0.0) == 0.0
    np.testing.assert_allclose(mt.qh_disk_radial(0.5), math.log(2))


@pytest.mark.parametrize("m,expected", [(3, 16), (7, 96), (14, 390)])
def test_square_closed_form(m, expected):
    r = mt.qh_square_maze(m, numeric=False)
    assert r.closed_form_length == expected
    assert r.closed_form_perimeter == 2 * expected


def test_square_numeric_oracle_m3():
    r = mt.qh_square_maze(3)
    np.testing.assert_allclose(r.numeric_length, 16.0, rtol=1e-8)


def test_single_corridor_segment():
    # one horizontal run of length 1 - 1/m at clearance 1/(2m) inside the maze
    m = 7
    spec = g.build_square_maze(m)
    c = 0.5 / m
    seg = g.Chain((g.ArcSegment.segment((c, c), (1 - c, c)),))
    np.testing.assert_allclose(mt.qh_length_numeric(seg, spec), 2 * (m - 1), rtol=1e-8)


def test_radial_annulus_segment():
    # spikes sit pi/M off the radial; the boundary circles win near both ends
    M = 10
    spec = g.build_spiked_annulus(M)
    R0, R1 = g.spiked_annulus_radii()
    seg = g.Chain((g.ArcSegment.segment((R0, 0.0), (R1, 0.0)),))
    d = lambda r: min(r * math.sin(math.pi / M), r - 0.25, 1.0 - r)
    expected, _ = quad(lambda r: 1.0 / d(r), R0, R1, points=[0.5, 0.7, 0.76, 0.8], epsabs=0, epsrel=1e-13, limit=200)
    np.testing.assert_allclose(mt.qh_length_numeric(seg, spec), expected, rtol=1e-8)


def test_numeric_rejects_touching_chain():
    spec = g.build_square_maze(3)
    seg = g.Chain((g.ArcSegment.segment((0.0, 0.5), (0.5, 0.5)),))
    with pytest.raises(g.GeometryError):
        mt.qh_length_numeric(seg, spec)


def test_report_invariants_and_serialisation():
    r = mt.QhReport("square_maze", {"m": 7}, 96.0, 96.5)
    assert r.closed_form_perimeter == 192.0
    np.testing.assert_allclose(r.rel_discrepancy, 0.5 / 96)
    d = json.loads(r.to_json())
    assert d["closed_form_perimeter"] == 192.0
    csv = mt.reports_to_csv([r])
    assert csv.splitlines()[0] == ",".join(mt.QhReport.CSV_HEADER)
    assert csv.splitlines()[1].startswith("square_maze,7,96.0,192.0,96.5,")


def test_closed_forms_monotone():
    for f, vals in ((mt.qh_circular_closed, range(3, 16)), (mt.qh_annulus_closed, range(6, 30, 2))):
        lengths = [f(v) for v in vals]
        assert all(b > a for a, b in zip(lengths, lengths[1:]))


def test_domain_quotient_square():
    np.testing.assert_allclose(mt.domain_quotient(g.build_square_maze(7)), 196.0, rtol=1e-8)
