"""Deterministic quadrature of expectations against the closed-polygon densities.

The adaptive kernel is QUADPACK (``scipy.integrate.quad``, 21-point
Gauss-Kronrod) applied piecewise on a geometric partition of a truncated
half-line. The truncation point is chosen from the integrand's log so
that the neglected tail is below ``atol / 100``.

Pair-density integrals are reduced exactly in ``y`` (the density does not
depend on it), then integrated numerically in ``x`` and ``z``. The
square-root endpoint at ``x = z/2`` is removed by substituting
``x = z/2 + s^2``.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .analytic import AnalyticContext, pairwise_xyz_weight, single_edge_pdf
from .errors import ConvergenceError

# the inner s-integrand carries exp(-s^2); exp(-64) is far below double epsilon
_S_MAX = 8.0


@dataclass(frozen=True)
class QuadratureSpec:
    rtol: float = 1e-11
    atol: float = 1e-13
    z_max: float | None = None  # None: choose from the tail bound
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def halved(self) -> "QuadratureSpec":
        return QuadratureSpec(self.rtol / 2, self.atol / 2, self.z_max, self.max_subdivisions)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int
    seconds: float
    upper: float

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "error_bound": self.error,
            "evaluations": self.evaluations,
            "wall_time": self.seconds,
            "truncation": self.upper,
        }


def truncation_point(f: Callable, atol: float, start: float = 1.0, limit: float = 1e5) -> float:
    """Smallest scanned ``t`` beyond the peak of ``f`` whose exponential tail
    estimate ``f(t) / rate`` is below ``atol / 100``."""
    t = start
    prev = None
    peak = 0.0
    while t < limit:
        v = float(f(t))
        peak = max(peak, v)
        if prev is not None and v < prev and v < peak:
            step = max(1.0, t / 8)
            nxt = float(f(t + step))
            if nxt <= 0.0:
                return t + step
            rate = math.log(v / nxt) / step if v > 0 else math.inf
            if rate > 0 and v / rate < atol / 100:
                return t
        prev = v
        t += max(1.0, t / 8)
    raise ConvergenceError("could not bound the integrand tail", math.nan, math.inf)


def _breakpoints(upper: float) -> list[float]:
    pts = [0.0]
    b = 0.5
    while b < upper:
        pts.append(b)
        b *= 2
    pts.append(upper)
    return pts


def _quad_pieces(f, upper: float, spec: QuadratureSpec, what: str):
    pts = _breakpoints(upper)
    total = 0.0
    err = 0.0
    neval = 0
    piece_atol = spec.atol / len(pts)
    for lo, hi in zip(pts[:-1], pts[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            out = integrate.quad(
                f, lo, hi, epsabs=piece_atol, epsrel=spec.rtol, limit=spec.max_subdivisions, full_output=1
            )
        v, e, info = out[0], out[1], out[2]
        neval += info["neval"]
        total += v
        err += e
        if len(out) > 3 and e > max(piece_atol, spec.rtol * abs(v)) * 10:
            raise ConvergenceError(f"{what}: {out[3].splitlines()[0]}", total, err, neval)
    return total, err, neval


def integrate_radial_density(density: Callable, spec: QuadratureSpec = QuadratureSpec(), dim: int = 3,
                             power: float = 0.0) -> QuadResult:
    """``int_0^inf c_d r^{d-1+power} density(r) dr`` with ``c_3 = 4 pi``, ``c_2 = 2 pi``.

    ``density`` is a spherically symmetric pdf on R^dim (w.r.t. volume);
    ``power`` turns the normalisation into the ``power``-th radial moment.
    """
    if dim == 3:
        c = 4 * math.pi
    elif dim == 2:
        c = 2 * math.pi
    else:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    t0 = time.perf_counter()

    def f(r):
        if r == 0.0:
            return 0.0
        return c * r ** (dim - 1 + power) * float(density(r))

    upper = spec.z_max or truncation_point(f, spec.atol)
    v, e, neval = _quad_pieces(f, upper, spec, "radial integral")
    return QuadResult(v, e, neval, time.perf_counter() - t0, upper)


def integrate_edge_moment(ctx: AnalyticContext, p: float, spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """``E |e_i|^p`` on closed n-gons by radial quadrature of the single-edge pdf."""
    return integrate_radial_density(lambda r: single_edge_pdf(ctx, r), spec, 3, power=p)


def integrate_pairwise_normalization(ctx: AnalyticContext, spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """Total mass of the pair density; should be 1.

    The ``y`` integral contributes the width ``z`` and the ``x`` integral of
    ``e^{-x}`` over ``[z/2, inf)`` contributes ``e^{-z/2}``; the remaining
    ``z`` integral is done numerically.
    """
    ctx.require_pairwise()
    t0 = time.perf_counter()

    def f(z):
        return z * math.exp(-z / 2) * float(pairwise_xyz_weight(ctx, z)) if z > 0 else 0.0

    upper = spec.z_max or truncation_point(f, spec.atol)
    v, e, neval = _quad_pieces(f, upper, spec, "pair normalization")
    return QuadResult(v, e, neval, time.perf_counter() - t0, upper)


def turning_angle_x_integral(z: float, spec: QuadratureSpec = QuadratureSpec()) -> tuple[float, float, int]:
    """``int_{z/2}^inf e^{-x} (pi z + pi sqrt(4x^2 - z^2) - 2 pi x) dx``.

    With ``x = z/2 + s^2`` the integrand becomes
    ``4 pi z e^{-z/2} s^2 e^{-s^2} / (sqrt(z + s^2) + s)``, smooth on ``s >= 0``.
    Returns ``(value, error, evaluations)``.
    """
    if z <= 0:
        return 0.0, 0.0, 0

    def g(s):
        return s * s * math.exp(-s * s) / (math.sqrt(z + s * s) + s)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(g, 0.0, _S_MAX, epsabs=0.0, epsrel=max(min(spec.rtol, 1e-13) / 10, 5e-14),
                             limit=spec.max_subdivisions, full_output=1)
    scale = 4 * math.pi * z * math.exp(-z / 2)
    return scale * out[0], scale * out[1], out[2]["neval"]


def expected_turning_angle_numeric(ctx: AnalyticContext, spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """Expected turning angle of a closed n-gon as a 2D integral over ``(x, z)``.

    The closed-form ``y`` integral of the angle leaves
    ``pi z + pi sqrt(4x^2 - z^2) - 2 pi x``; that is integrated against
    ``e^{-x}`` in ``x`` and then against the ``z`` factor of the pair
    density.
    """
    ctx.require_pairwise()
    t0 = time.perf_counter()
    inner_evals = 0
    inner_rel = 0.0

    def f(z):
        nonlocal inner_evals, inner_rel
        if z <= 0:
            return 0.0
        v, e, k = turning_angle_x_integral(z, spec)
        inner_evals += k
        if v > 0:
            inner_rel = max(inner_rel, e / v)
        return float(pairwise_xyz_weight(ctx, z)) * v

    # the z-integrand decays like the normalisation integrand times a polynomial
    upper = spec.z_max or truncation_point(
        lambda z: 4 * math.pi * z * z * math.exp(-z / 2) * float(pairwise_xyz_weight(ctx, z)), spec.atol
    )
    v, e, neval = _quad_pieces(f, upper, spec, "turning angle")
    err = e + inner_rel * abs(v)
    return QuadResult(v, err, neval + inner_evals, time.perf_counter() - t0, upper)
