"""Conformal capacity of maze-like condensers.

Geometry builders, finite element capacities, quasihyperbolic estimates and
the explicit conformal map of a cusp triangle.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("mazecap")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from .geometry import CondenserSpec, GeometryError, build, validate_spec
from .fem import CapacityResult, capacity
from .metrics import QhReport

__all__ = [
    "CondenserSpec",
    "GeometryError",
    "build",
    "validate_spec",
    "CapacityResult",
    "capacity",
    "QhReport",
    "__version__",
]
