"""Explicit conformal map of the cusp arc triangle onto the upper half-plane.

A Moebius map ``h`` with its pole at the cusp ``1`` sends the two tangent
sides to the vertical lines ``Re = +-1`` and the third side to ``(-1, 1)``,
so the triangle becomes a half-strip. ``f(zeta) = sin(pi*zeta/2)`` then
opens the half-strip onto the upper half-plane.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import ArcTriangle, GeometryError, arc_triangle

MEMBERSHIP_TOL = 1e-12
POLE_RADIUS = 1e-14


class _Infinity:
    """The point at infinity of the extended plane."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def is_infinite(z) -> bool:
    return z is INFINITY


@dataclass(frozen=True)
class MoebiusMap:
    """``h(z) = (z + b) / (c z - c)``; the pole sits at ``z = 1``."""

    b: complex
    c: complex

    def __call__(self, z):
        if z is INFINITY:
            return 1.0 / self.c
        z = complex(z)
        den = self.c * (z - 1.0)
        if abs(z - 1.0) < POLE_RADIUS or den == 0:
            return INFINITY
        return (z + self.b) / den

    def many(self, z: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; the pole maps to ``nan``."""
        z = np.asarray(z, dtype=complex)
        den = self.c * (z - 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (z + self.b) / den
        out[np.abs(z - 1.0) < POLE_RADIUS] = np.nan
        return out


def moebius_coeffs(v: complex) -> MoebiusMap:
    """The Moebius map with ``h(v) = 1``, ``h(conj v) = -1`` and ``h(1) = inf``."""
    v = complex(v)
    vb = v.conjugate()
    if abs(v.imag) < 1e-15:
        raise ValueError("v must not be real")
    den = v + vb - 2.0
    if abs(den) < 1e-15:
        raise ValueError("Re v = 1 gives a degenerate map")
    b = (v + vb - 2.0 * v * vb) / den
    c = (v - vb) / den
    return MoebiusMap(b, c)


def strip_map(zeta):
    """``sin(pi zeta / 2)``: half-strip ``|Re| < 1, Im > 0`` onto the upper half-plane."""
    if zeta is INFINITY:
        return INFINITY
    return np.sin(0.5 * np.pi * np.asarray(zeta, dtype=complex))[()]


def in_triangle(tri: ArcTriangle, z: complex, tol: float = MEMBERSHIP_TOL) -> bool:
    """Closed triangle: outside both tangent circles and inside the third."""
    z = complex(z)
    R = tri.s1_radius
    return (
        abs(z - tri.u) >= R - tol
        and abs(z - tri.u.conjugate()) >= R - tol
        and abs(z - tri.w) <= tri.s3_radius + tol
    )


def map_triangle_to_halfplane(tri: ArcTriangle, z: complex, h: MoebiusMap | None = None):
    """``f(h(z))`` for ``z`` in the closed triangle; the cusp maps to ``INFINITY``."""
    if not in_triangle(tri, z):
        raise GeometryError(f"{z} is not in the arc triangle")
    h = h or moebius_coeffs(tri.v)
    return strip_map(h(z))


@dataclass
class TriangleMapDiagnostics:
    theta: float
    samples: int
    s1_line_dev: float  # max |Re h - 1| on S1
    s2_line_dev: float  # max |Re h + 1| on S2
    s3_real_dev: float  # max |Im h| on S3
    s3_inside: bool  # Re h(S3) within [-1, 1]
    s3_image_imag: float  # max |Im f(h(z))| on S3
    s1_upper: bool  # Im h > 0 on S1 away from its ends
    s2_upper: bool
    vertex_v: complex
    vertex_vbar: complex
    cusp_infinite: bool

    @property
    def max_deviation(self) -> float:
        return max(self.s1_line_dev, self.s2_line_dev, self.s3_real_dev, self.s3_image_imag)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("vertex_v", "vertex_vbar"):
            d[k] = [d[k].real, d[k].imag]
        d["max_deviation"] = self.max_deviation
        return d


def side_samples(tri: ArcTriangle, samples: int) -> dict[str, np.ndarray]:
    t = np.linspace(0.0, 1.0, samples)
    out = {}
    for name, seg in (("S1", tri.S1), ("S2", tri.S2), ("S3", tri.S3)):
        p = seg.point_at(t)
        out[name] = p[:, 0] + 1j * p[:, 1]
    return out


def verify_triangle_map(tri: ArcTriangle, samples: int = 100) -> TriangleMapDiagnostics:
    """Check the side images of ``h`` and of ``f o h`` on sampled boundary points."""
    if samples < 3:
        raise ValueError("need at least 3 samples per side")
    h = moebius_coeffs(tri.v)
    pts = side_samples(tri, samples)
    img = {k: h.many(z) for k, z in pts.items()}
    fin = {k: np.isfinite(w) for k, w in img.items()}
    s1, s2, s3 = (img[k][fin[k]] for k in ("S1", "S2", "S3"))
    inner = lambda w: w[1:-1] if len(w) > 2 else w
    f3 = np.sin(0.5 * np.pi * s3)
    return TriangleMapDiagnostics(
        theta=tri.theta,
        samples=samples,
        s1_line_dev=float(np.max(np.abs(s1.real - 1.0))),
        s2_line_dev=float(np.max(np.abs(s2.real + 1.0))),
        s3_real_dev=float(np.max(np.abs(s3.imag))),
        s3_inside=bool(np.all(np.abs(s3.real) <= 1.0 + 1e-10)),
        s3_image_imag=float(np.max(np.abs(f3.imag))),
        s1_upper=bool(np.all(inner(s1).imag > 0)),
        s2_upper=bool(np.all(inner(s2).imag > 0)),
        vertex_v=complex(h(tri.v)),
        vertex_vbar=complex(h(tri.v.conjugate())),
        cusp_infinite=h(1.0) is INFINITY,
    )


def cauchy_riemann_residual(tri: ArcTriangle, z: complex, step: float = 1e-6) -> float:
    """Relative mismatch of ``d/dx`` and ``-i d/dy`` of ``f o h`` at ``z``."""
    h = moebius_coeffs(tri.v)
    F = lambda p: complex(strip_map(h(p)))
    dx = (F(z + step) - F(z - step)) / (2 * step)
    dy = (F(z + 1j * step) - F(z - 1j * step)) / (2 * step)
    return abs(dx + 1j * dy) / max(abs(dx), 1e-300)


def interior_point(tri: ArcTriangle) -> complex:
    """Midpoint of the triangle's segment of the real axis, from the cusp to S3."""
    return complex(0.5 * (1.0 + tri.w.real + tri.s3_radius), 0.0)


def triangle_map_table(theta: float, samples: int) -> tuple[str, dict]:
    """CSV of ``(side, z, f(h(z)))`` samples and the diagnostics dictionary."""
    tri = arc_triangle(theta)
    h = moebius_coeffs(tri.v)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["side", "z_re", "z_im", "image_re", "image_im"])
    for side, zs in side_samples(tri, samples).items():
        for z in zs:
            w = strip_map(h(z))
            if w is INFINITY:
                wr.writerow([side, repr(z.real), repr(z.imag), "inf", "inf"])
            else:
                wr.writerow([side, repr(z.real), repr(z.imag), repr(float(w.real)), repr(float(w.imag))])
    diag = verify_triangle_map(tri, samples).to_dict()
    diag["b"] = [h.b.real, h.b.imag]
    diag["c"] = [h.c.real, h.c.imag]
    return buf.getvalue(), diag


def diagnostics_json(diag: dict) -> str:
    return json.dumps(diag, indent=1, sort_keys=True)
