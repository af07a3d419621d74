"""Hot-loop backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise (or
when the environment sets ``POLYLAB_PURE=1``) the numpy/pure-Python
``_fallback`` module is used. Both expose the same three functions.
"""
import os

from . import _fallback

BACKEND = "python"
if os.environ.get("POLYLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback
else:
    _impl = _fallback

total_curvature_batch = _impl.total_curvature_batch
total_torsion_batch = _impl.total_torsion_batch
crankshaft_run = _impl.crankshaft_run

__all__ = [
    "BACKEND",
    "total_curvature_batch",
    "total_torsion_batch",
    "crankshaft_run",
]
