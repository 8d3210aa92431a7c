"""Optional numba acceleration.

Kernels are written once as plain Python loops over numpy arrays. When numba
is importable and ``MAZECAP_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``njit``; otherwise the caller gets the vectorised numpy
fallback registered next to each kernel.
"""

from __future__ import annotations

import os

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("MAZECAP_DISABLE_NUMBA", "0").strip().lower()
    return _HAVE_NUMBA and flag in ("", "0", "false", "no")


def njit(func):
    """Compile ``func`` lazily with numba (cached on disk) if available."""
    if not _HAVE_NUMBA:  # pragma: no cover
        return func
    return numba.njit(cache=True)(func)


def pick(jitted, fallback):
    """Return the kernel to use for the current environment setting."""
    return jitted if numba_enabled() else fallback
