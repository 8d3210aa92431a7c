"""Element-level finite element kernels.

Each kernel has a numba version (``*_jit``) and a vectorised numpy version
(``*_np``); the public name dispatches on ``MAZECAP_DISABLE_NUMBA``.

Quadratic elements are isoparametric: the six geometry nodes of a triangle
are its vertices and edge nodes, the latter placed on the true arc for
curved boundary edges. Local node ``3 + k`` sits on the edge opposite
vertex ``k``.
"""

from __future__ import annotations

import numpy as np

from ._accel import njit, pick

# 6-point rule, exact for degree 4 on the reference triangle (weights sum to 1)
_A1, _W1 = 0.44594849091596488632, 0.22338158967801146570
_A2, _W2 = 0.09157621350977074346, 0.10995174365532186764
QUAD_PTS = np.array(
    [
        [_A1, _A1],
        [1 - 2 * _A1, _A1],
        [_A1, 1 - 2 * _A1],
        [_A2, _A2],
        [1 - 2 * _A2, _A2],
        [_A2, 1 - 2 * _A2],
    ]
)
QUAD_W = np.array([_W1, _W1, _W1, _W2, _W2, _W2]) * 0.5


def p2_reference_gradients(pts: np.ndarray) -> np.ndarray:
    """``(npts, 6, 2)`` derivatives of the P2 shape functions at reference points."""
    xi, eta = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1 - xi - eta, xi, eta
    d0, d1, d2 = np.array([-1.0, -1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    g = np.empty((len(pts), 6, 2))
    g[:, 0] = (4 * l0 - 1)[:, None] * d0
    g[:, 1] = (4 * l1 - 1)[:, None] * d1
    g[:, 2] = (4 * l2 - 1)[:, None] * d2
    g[:, 3] = 4 * (l1[:, None] * d2 + l2[:, None] * d1)
    g[:, 4] = 4 * (l2[:, None] * d0 + l0[:, None] * d2)
    g[:, 5] = 4 * (l0[:, None] * d1 + l1[:, None] * d0)
    return g


DN = p2_reference_gradients(QUAD_PTS)


# --- P1 ---------------------------------------------------------------------


@njit
def _p1_stiffness_jit(geo):
    nt = geo.shape[0]
    ke = np.empty((nt, 3, 3))
    for t in range(nt):
        x0, y0 = geo[t, 0, 0], geo[t, 0, 1]
        x1, y1 = geo[t, 1, 0], geo[t, 1, 1]
        x2, y2 = geo[t, 2, 0], geo[t, 2, 1]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        bx0, by0 = y1 - y2, x2 - x1
        bx1, by1 = y2 - y0, x0 - x2
        bx2, by2 = y0 - y1, x1 - x0
        c = 0.5 / det
        bx = (bx0, bx1, bx2)
        by = (by0, by1, by2)
        for i in range(3):
            for j in range(3):
                ke[t, i, j] = c * (bx[i] * bx[j] + by[i] * by[j])
    return ke


def _p1_stiffness_np(geo):
    x, y = geo[:, :, 0], geo[:, :, 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    by = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    return (0.5 / det)[:, None, None] * (bx[:, :, None] * bx[:, None, :] + by[:, :, None] * by[:, None, :])


# --- P2 (isoparametric) -----------------------------------------------------


@njit
def _p2_stiffness_jit(geo, dn, w):
    nt = geo.shape[0]
    nq = w.shape[0]
    ke = np.zeros((nt, 6, 6))
    gx = np.empty(6)
    gy = np.empty(6)
    for t in range(nt):
        for q in range(nq):
            j00 = 0.0
            j01 = 0.0
            j10 = 0.0
            j11 = 0.0
            for a in range(6):
                j00 += geo[t, a, 0] * dn[q, a, 0]
                j01 += geo[t, a, 0] * dn[q, a, 1]
                j10 += geo[t, a, 1] * dn[q, a, 0]
                j11 += geo[t, a, 1] * dn[q, a, 1]
            det = j00 * j11 - j01 * j10
            for a in range(6):
                gx[a] = (j11 * dn[q, a, 0] - j10 * dn[q, a, 1]) / det
                gy[a] = (-j01 * dn[q, a, 0] + j00 * dn[q, a, 1]) / det
            c = w[q] * det
            for a in range(6):
                for b in range(6):
                    ke[t, a, b] += c * (gx[a] * gx[b] + gy[a] * gy[b])
    return ke


def _p2_jacobians(geo, dn):
    # J[t, q] = sum_a geo[t, a, :] (x) dn[q, a, :]
    J = np.einsum("tai,qaj->tqij", geo, dn)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1] / det
    inv[..., 0, 1] = -J[..., 0, 1] / det
    inv[..., 1, 0] = -J[..., 1, 0] / det
    inv[..., 1, 1] = J[..., 0, 0] / det
    # physical gradient: grad N_a = J^{-T} dn_a
    grads = np.einsum("tqji,qaj->tqai", inv, dn)
    return det, grads


def _p2_stiffness_np(geo, dn, w):
    det, grads = _p2_jacobians(geo, dn)
    return np.einsum("q,tq,tqai,tqbi->tab", w, det, grads, grads)


@njit
def _p2_min_jacobian_jit(geo, dn):
    nt = geo.shape[0]
    out = np.empty(nt)
    for t in range(nt):
        best = np.inf
        for q in range(dn.shape[0]):
            j00 = 0.0
            j01 = 0.0
            j10 = 0.0
            j11 = 0.0
            for a in range(6):
                j00 += geo[t, a, 0] * dn[q, a, 0]
                j01 += geo[t, a, 0] * dn[q, a, 1]
                j10 += geo[t, a, 1] * dn[q, a, 0]
                j11 += geo[t, a, 1] * dn[q, a, 1]
            d = j00 * j11 - j01 * j10
            if d < best:
                best = d
        out[t] = best
    return out


def _p2_min_jacobian_np(geo, dn):
    det, _ = _p2_jacobians(geo, dn)
    return det.min(axis=1)


@njit
def _p2_energy_jit(geo, vals, dn, w):
    nt = geo.shape[0]
    out = np.zeros(nt)
    for t in range(nt):
        for q in range(w.shape[0]):
            j00 = 0.0
            j01 = 0.0
            j10 = 0.0
            j11 = 0.0
            for a in range(6):
                j00 += geo[t, a, 0] * dn[q, a, 0]
                j01 += geo[t, a, 0] * dn[q, a, 1]
                j10 += geo[t, a, 1] * dn[q, a, 0]
                j11 += geo[t, a, 1] * dn[q, a, 1]
            det = j00 * j11 - j01 * j10
            ux = 0.0
            uy = 0.0
            for a in range(6):
                ux += vals[t, a] * (j11 * dn[q, a, 0] - j10 * dn[q, a, 1]) / det
                uy += vals[t, a] * (-j01 * dn[q, a, 0] + j00 * dn[q, a, 1]) / det
            out[t] += w[q] * det * (ux * ux + uy * uy)
    return out


def _p2_energy_np(geo, vals, dn, w):
    det, grads = _p2_jacobians(geo, dn)
    g = np.einsum("ta,tqai->tqi", vals, grads)
    return np.einsum("q,tq,tqi->t", w, det, g * g)


def _p1_energy_np(geo, vals):
    x, y = geo[:, :, 0], geo[:, :, 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    by = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    ux = (bx * vals).sum(axis=1) / det
    uy = (by * vals).sum(axis=1) / det
    return 0.5 * det * (ux * ux + uy * uy)


@njit
def _p1_energy_jit(geo, vals):
    nt = geo.shape[0]
    out = np.empty(nt)
    for t in range(nt):
        x0, y0 = geo[t, 0, 0], geo[t, 0, 1]
        x1, y1 = geo[t, 1, 0], geo[t, 1, 1]
        x2, y2 = geo[t, 2, 0], geo[t, 2, 1]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        ux = ((y1 - y2) * vals[t, 0] + (y2 - y0) * vals[t, 1] + (y0 - y1) * vals[t, 2]) / det
        uy = ((x2 - x1) * vals[t, 0] + (x0 - x2) * vals[t, 1] + (x1 - x0) * vals[t, 2]) / det
        out[t] = 0.5 * det * (ux * ux + uy * uy)
    return out


def p1_stiffness(geo: np.ndarray) -> np.ndarray:
    return pick(_p1_stiffness_jit, _p1_stiffness_np)(np.ascontiguousarray(geo))


def p2_stiffness(geo: np.ndarray) -> np.ndarray:
    return pick(_p2_stiffness_jit, _p2_stiffness_np)(np.ascontiguousarray(geo), DN, QUAD_W)


def p2_min_jacobian(geo: np.ndarray) -> np.ndarray:
    return pick(_p2_min_jacobian_jit, _p2_min_jacobian_np)(np.ascontiguousarray(geo), DN)


def p1_energy(geo: np.ndarray, vals: np.ndarray) -> np.ndarray:
    return pick(_p1_energy_jit, _p1_energy_np)(np.ascontiguousarray(geo), np.ascontiguousarray(vals))


def p2_energy(geo: np.ndarray, vals: np.ndarray) -> np.ndarray:
    return pick(_p2_energy_jit, _p2_energy_np)(
        np.ascontiguousarray(geo), np.ascontiguousarray(vals), DN, QUAD_W
    )
