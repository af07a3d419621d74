"""Quaternion helpers and the coordinatewise Hopf map.

Quaternions are numpy arrays whose last axis holds ``(q0, q1, q2, q3)``
for ``q0 + q1 i + q2 j + q3 k``; products use the Hamilton convention
``ij = k``. A quaternion ``a + b j`` with complex ``a, b`` is passed as the
pair ``(a, b)``.
"""
from __future__ import annotations

import numpy as np

from .geometry import PolygonArm


def qmul(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    p0, p1, p2, p3 = np.moveaxis(p, -1, 0)
    q0, q1, q2, q3 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
            p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
            p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
            p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
        ],
        axis=-1,
    )


def qconj(q):
    return np.asarray(q, dtype=np.float64) * np.array([1.0, -1.0, -1.0, -1.0])


def rotate(w, v):
    """Image of the 3-vector ``v`` under ``v -> conj(w) v w`` (w a unit quaternion)."""
    v = np.asarray(v, dtype=np.float64)
    vq = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
    return qmul(qmul(qconj(w), vq), w)[..., 1:]


def hopf_map(q):
    """``conj(q) i q`` in coordinates; the result has norm ``|q|^2``."""
    q = np.asarray(q, dtype=np.float64)
    q0, q1, q2, q3 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3,
            2 * q1 * q2 - 2 * q0 * q3,
            2 * q0 * q2 + 2 * q1 * q3,
        ],
        axis=-1,
    )


def hopf_map_complex(a, b):
    """Hopf image of ``a + b j`` computed from the complex pair."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    ab = a * np.conj(b)
    return np.stack(
        [a.real * a.real + a.imag * a.imag - b.real * b.real - b.imag * b.imag, 2 * ab.imag, 2 * ab.real],
        axis=-1,
    )


def hopf_map_planar(x, y, component: str = "first"):
    """Planar edges from real coordinates ``z_i = x_i + y_i j``.

    ``component="first"`` gives ``i conj(z)^2`` and ``"second"`` gives the
    image ``i z^2`` of the other copy ``i z``. The ``i``-``k`` plane is
    identified with R^2 as ``(i-coefficient, k-coefficient)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"coordinate arrays differ in shape: {x.shape} vs {y.shape}")
    if component == "first":
        sign = -1.0
    elif component == "second":
        sign = 1.0
    else:
        raise ValueError(f"component must be 'first' or 'second', got {component!r}")
    return np.stack([x * x - y * y, sign * 2 * x * y], axis=-1)


def coordinatewise_hopf(qs) -> PolygonArm:
    """Arm whose i-th edge is the Hopf image of the i-th quaternion."""
    qs = np.atleast_2d(np.asarray(qs, dtype=np.float64))
    return PolygonArm(hopf_map(qs))
