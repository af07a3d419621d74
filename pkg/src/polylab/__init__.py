"""Random polygon sampling, exact curvature expectations and quadrature cross-checks."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
