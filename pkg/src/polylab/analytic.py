"""Closed-form densities and expectations for Hopf-Gaussian polygons.

All Bessel functions needed here have half-integer order, so they are
evaluated from the terminating series

    K_{m+1/2}(u) = sqrt(pi / 2u) e^{-u} sum_{i=0}^{m} (m+i)! / (i! (m-i)! (2u)^i)

in log space. Most densities only ever need ``z^{m+1/2} K_{m+1/2}(z/2)``,
which the same series turns into ``sqrt(pi) e^{-z/2}`` times a polynomial in
``z`` with no pole at the origin (see :func:`log_zpow_bessel_k_half`).

Gamma-function prefactors are assembled as logarithms and exponentiated
last: ``Gamma(2n - 4)`` overflows a double near ``n = 90``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

LOG_PI = math.log(math.pi)
LOG_2 = math.log(2.0)
_EXACT_GAMMA_MAX = 512


@dataclass(frozen=True)
class HalfIntOrder:
    """Bessel order ``m + 1/2``; ``m = -1`` is the order ``-1/2``."""

    m: int

    def __post_init__(self):
        if self.m < -1:
            raise ValueError(f"half-integer order needs m >= -1, got {self.m}")

    @property
    def nu(self) -> float:
        return self.m + 0.5


def _order_index(order) -> int:
    m = order.m if isinstance(order, HalfIntOrder) else int(order)
    if m < -1:
        raise ValueError(f"half-integer order needs m >= -1, got {m}")
    # K_{-nu} = K_nu
    return 0 if m == -1 else m


@lru_cache(maxsize=None)
def _log_factorial(k: int) -> float:
    return math.log(math.factorial(k)) if k > 1 else 0.0


def log_gamma(x: float) -> float:
    """``log Gamma(x)`` with exact factorial tables for small (half-)integers."""
    if x > 0 and x <= _EXACT_GAMMA_MAX:
        if float(x).is_integer():
            return _log_factorial(int(x) - 1)
        if (2 * x).is_integer():
            # Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
            k = int(x - 0.5)
            return _log_factorial(2 * k) + 0.5 * LOG_PI - 2 * k * LOG_2 - _log_factorial(k)
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


@lru_cache(maxsize=None)
def _watson_log_coeffs(m: int) -> np.ndarray:
    # log of the integer (m+i)! / (i! (m-i)!), i = 0..m
    return np.array(
        [math.log(math.factorial(m + i) // (math.factorial(i) * math.factorial(m - i))) for i in range(m + 1)]
    )


def _log_sum_exp_rows(t: np.ndarray) -> np.ndarray:
    """log(sum(exp(t), axis=1)) with a Neumaier-compensated sum of the shifted terms."""
    mx = np.max(t, axis=1)
    w = np.exp(t - mx[:, None])
    s = np.zeros(t.shape[0])
    c = np.zeros(t.shape[0])
    for col in w.T:
        tot = s + col
        c += np.where(np.abs(s) >= np.abs(col), (s - tot) + col, (col - tot) + s)
        s = tot
    return mx + np.log(s + c)


def log_bessel_k_half(order, z):
    """``log K_{m+1/2}(z)`` for ``z > 0``."""
    m = _order_index(order)
    z = np.asarray(z, dtype=np.float64)
    if np.any(~(z > 0)):
        raise DomainError("Bessel K is only evaluated for positive arguments")
    zz = np.atleast_1d(z).ravel()
    lc = _watson_log_coeffs(m)
    i = np.arange(m + 1)
    t = lc[None, :] - i[None, :] * np.log(2 * zz)[:, None]
    out = 0.5 * (LOG_PI - np.log(2 * zz)) - zz + _log_sum_exp_rows(t)
    return out.reshape(z.shape) if z.ndim else float(out[0])


def bessel_k_half(order, z):
    """Modified Bessel function ``K_{m+1/2}(z)`` of half-integer order."""
    return np.exp(log_bessel_k_half(order, z))


def log_zpow_bessel_k_half(m: int, z):
    """``log( z^{m+1/2} K_{m+1/2}(z/2) )`` for ``z >= 0``, finite at ``z = 0``.

    Equals ``log sqrt(pi) - z/2 + log sum_i c_i z^{m-i}`` with the Watson
    coefficients ``c_i``.
    """
    if m < 0:
        raise ValueError("needs m >= 0 (positive order)")
    z = np.asarray(z, dtype=np.float64)
    if np.any(z < 0):
        raise DomainError("argument must be non-negative")
    zz = np.atleast_1d(z).ravel()
    lc = _watson_log_coeffs(m)
    i = np.arange(m + 1)
    out = np.empty_like(zz)
    pos = zz > 0
    if np.any(pos):
        zp = zz[pos]
        t = lc[None, :] + (m - i)[None, :] * np.log(zp)[:, None]
        out[pos] = 0.5 * LOG_PI - zp / 2 + _log_sum_exp_rows(t)
    out[~pos] = 0.5 * LOG_PI + lc[m]
    return out.reshape(z.shape) if z.ndim else float(out[0])


# -- Green's functions and normalising constants ----------------------------


def _log_green_prefactor(k: int) -> float:
    return -(2 * k + 2) * LOG_2 - 1.5 * LOG_PI - log_gamma(k)


def log_green_function(k: int, r):
    """Log-density of the end-to-end vector of a ``k``-edge Hopf-Gaussian arm."""
    if k < 1:
        raise ValueError(f"green_function needs k >= 1, got {k}")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    if k == 1:
        with np.errstate(divide="ignore"):
            # r^{-1/2} K_{-1/2}(r/2) = sqrt(pi) e^{-r/2} / r
            val = _log_green_prefactor(1) + 0.5 * LOG_PI - r / 2 - np.log(r)
        return val if r.ndim else float(val)
    return _log_green_prefactor(k) + log_zpow_bessel_k_half(k - 2, r)


def green_function(k: int, r):
    """Spherically symmetric pdf ``G_k(r)`` on R^3 (w.r.t. volume).

    ``G_1(r) = exp(-r/2) / (16 pi r)``; for ``k >= 2`` the value at the
    origin is finite and equals :func:`hausdorff_constant`.
    """
    return np.exp(log_green_function(k, r))


def log_hausdorff_constant(n: int) -> float:
    if n < 2:
        raise ValueError(f"hausdorff_constant needs n >= 2, got {n}")
    return log_gamma(n - 1.5) - log_gamma(n) - 6 * LOG_2 - 1.5 * LOG_PI


def hausdorff_constant(n: int) -> float:
    """``C_n = G_n(0) = Gamma(n - 3/2) / (64 pi^{3/2} Gamma(n))``.

    This is the value at the origin of :func:`green_function`; it also equals
    the convolution ``int G_1 G_{n-1} dVol`` that normalises the single-edge
    density.
    """
    return math.exp(log_hausdorff_constant(n))


def log_projection_pdf(k: int, y):
    if k < 1:
        raise ValueError(f"projection_pdf needs k >= 1, got {k}")
    ay = np.abs(np.asarray(y, dtype=np.float64))
    return log_zpow_bessel_k_half(k - 1, ay) - 2 * k * LOG_2 - 0.5 * LOG_PI - log_gamma(k)


def projection_pdf(k: int, y):
    """pdf on the line of one coordinate of a ``k``-edge arm's end-to-end vector:
    the difference of two independent chi-squared variables with ``2k``
    degrees of freedom."""
    return np.exp(log_projection_pdf(k, y))


# -- closed polygon densities -----------------------------------------------


@dataclass(frozen=True)
class AnalyticContext:
    """Precomputed log-prefactors for closed ``n``-gon densities."""

    n: int
    log_c_n: float = field(init=False)
    log_single_edge_norm: float = field(init=False)
    log_pair_norm: float = field(init=False)
    log_pair_xyz_norm: float = field(init=False)

    def __post_init__(self):
        n = self.n
        if n < 3:
            raise ValueError(f"closed polygon densities need n >= 3, got {n}")
        s = object.__setattr__
        s(self, "log_c_n", log_hausdorff_constant(n))
        s(self, "log_single_edge_norm", math.log(n - 1) - (2 * n - 2) * LOG_2 - LOG_PI - log_gamma(n - 1.5))
        if n >= 4:
            base = log_gamma(n) - 0.5 * LOG_PI - log_gamma(2 * n - 4)
            s(self, "log_pair_norm", base - 2 * LOG_2)
            s(self, "log_pair_xyz_norm", base - LOG_2)
        else:
            s(self, "log_pair_norm", math.nan)
            s(self, "log_pair_xyz_norm", math.nan)

    @property
    def c_n(self) -> float:
        return math.exp(self.log_c_n)

    def require_pairwise(self):
        if self.n < 4:
            raise ValueError(f"pairwise densities need n >= 4, got {self.n}")


def single_edge_pdf(ctx: AnalyticContext, r):
    """pdf (w.r.t. volume on R^3) of one edge of a closed Hopf-Gaussian n-gon."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(~(r > 0)):
        raise DomainError("single_edge_pdf needs r > 0")
    n = ctx.n
    # r^{n-7/2} K_{n-5/2}(r/2) = r^{-1} * [r^{n-5/2} K_{n-5/2}(r/2)]
    val = ctx.log_single_edge_norm - r / 2 - np.log(r) + log_zpow_bessel_k_half(n - 3, r)
    return np.exp(val)


def pair_z(r1, r2, theta):
    return np.sqrt(np.maximum(r1 * r1 + r2 * r2 + 2 * r1 * r2 * np.cos(theta), 0.0))


def pairwise_pdf(ctx: AnalyticContext, r1, r2, theta):
    """Joint density of two consecutive edges in ``(r1, r2, theta)`` coordinates,
    including the ``sin(theta)`` volume factor."""
    ctx.require_pairwise()
    r1 = np.asarray(r1, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(~(r1 > 0)) or np.any(~(r2 > 0)) or np.any(theta < 0) or np.any(theta > math.pi):
        raise DomainError("pairwise_pdf needs r1, r2 > 0 and 0 <= theta <= pi")
    z = pair_z(r1, r2, theta)
    logv = (
        ctx.log_pair_norm
        + np.log(r1)
        + np.log(r2)
        - (r1 + r2) / 2
        + log_zpow_bessel_k_half(ctx.n - 4, z)
    )
    return np.exp(logv) * np.sin(theta)


def to_xyz(r1, r2, theta):
    """Map ``(r1, r2, theta)`` to ``x = (r1+r2)/2, y = (r1-r2)/2, z = |e1 + e2|``."""
    return (np.asarray(r1) + r2) / 2, (np.asarray(r1) - r2) / 2, pair_z(r1, r2, theta)


def pairwise_xyz_weight(ctx: AnalyticContext, z):
    """The ``z``-dependent factor of the ``(x, y, z)`` pair density:
    ``norm * z^{n-5/2} K_{n-7/2}(z/2)``."""
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.exp(ctx.log_pair_xyz_norm + np.log(z) + log_zpow_bessel_k_half(ctx.n - 4, z))


def pairwise_pdf_xyz(ctx: AnalyticContext, x, y, z):
    """Pair density w.r.t. ``dx dy dz`` on ``{z > 0, x >= z/2, |y| <= z/2}``."""
    ctx.require_pairwise()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if np.any(~(z > 0)) or np.any(x < z / 2) or np.any(np.abs(y) > z / 2):
        raise DomainError("pairwise_pdf_xyz needs z > 0, x >= z/2 and |y| <= z/2")
    return np.exp(-x) * pairwise_xyz_weight(ctx, z) * np.ones_like(y)


# -- exact expectations -----------------------------------------------------


def _check_closed_n(n: int):
    if n < 3:
        raise ValueError(f"closed polygons need n >= 3, got {n}")


def exact_expected_total_curvature(n: int) -> float:
    """Expected total curvature of a closed space n-gon: ``pi n/2 + (pi/4) 2n/(2n-3)``."""
    _check_closed_n(n)
    return math.pi * (n * (n - 1) / (2 * n - 3))


def exact_expected_turning_angle(n: int) -> float:
    """Expected turning angle ``pi (n-1)/(2n-3) = pi/2 + (pi/4) 2/(2n-3)``."""
    _check_closed_n(n)
    return math.pi * ((n - 1) / (2 * n - 3))


def exact_surplus(n: int) -> float:
    """``E(kappa) - pi n / 2``, i.e. ``(pi/4) 2n / (2n-3)``."""
    _check_closed_n(n)
    return math.pi / 4 * (2 * n / (2 * n - 3))


def asymptotic_surplus(d: int, m1: float, m2: float) -> float:
    """Limit of ``E(kappa) - pi n/2`` for closed polygons with iid-generated edges."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    if not (m1 > 0 and m2 > 0) or m1 * m1 > m2 * (1 + 1e-12):
        raise ValueError(f"invalid edge-length moments m1={m1}, m2={m2}")
    c = d / (d - 1) * math.exp(log_beta(d / 2, d / 2) - log_beta((d - 1) / 2, (d + 1) / 2))
    return c * m1 * m1 / m2


def arm_edge_moment(d: int, p: int) -> int:
    """``E |e|^p`` for a Hopf-Gaussian arm: ``2^p p!`` (d=2), ``2^p (p+1)!`` (d=3)."""
    if p < 0 or int(p) != p:
        raise ValueError(f"p must be a non-negative integer, got {p}")
    if d == 2:
        return 2**p * math.factorial(p)
    if d == 3:
        return 2**p * math.factorial(p + 1)
    raise ValueError(f"arm moments are defined for d in {{2, 3}}, got {d}")


def arm_chord_expectation(d: int, k: int) -> float:
    """Expected squared chord over ``k`` edges of a Hopf-Gaussian arm."""
    return k * arm_edge_moment(d, 2)


def arm_gyradius_expectation(d: int, n: int) -> float:
    """Expected squared radius of gyration of an ``n``-edge Hopf-Gaussian arm."""
    return n * (n + 2) / (6 * (n + 1)) * arm_edge_moment(d, 2)


@dataclass(frozen=True)
class ClosedPolygonExpectations:
    """Exact edge moments, chords and gyradius for closed Hopf-Gaussian space n-gons."""

    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"needs n >= 4, got {self.n}")

    def edge_moment(self, p: float) -> float:
        n = self.n
        lv = (
            math.log(n - 1)
            + log_gamma(2 * n + p - 3)
            - LOG_2
            - log_gamma(2 * n - 4)
            + log_beta(p + 2, n - 2)
        )
        return math.exp(lv)

    def chord(self, k: int) -> float:
        n = self.n
        if not 1 <= k <= n - 1:
            raise ValueError(f"chord skip must satisfy 1 <= k <= {n - 1}, got {k}")
        return (n - k) / n * 12 * k * (2 * n - 3) / (n + 1)

    @property
    def gyradius(self) -> float:
        n = self.n
        return (n - 1) / n * (2 * n - 3)


def closed_polygon_expectations(n: int) -> ClosedPolygonExpectations:
    return ClosedPolygonExpectations(n)


def unknot_fraction_bound_exact(n: int, bridge: int = 2) -> Fraction:
    if n < 3 or bridge < 2:
        raise ValueError("needs n >= 3 and bridge >= 2")
    x = Fraction((n - 2) * (n - 3), (bridge - 1) * 2 * (2 * n - 3))
    return max(Fraction(0), 1 - x)


def unknot_fraction_bound(n: int, bridge: int = 2) -> float:
    """Lower bound on the fraction of closed n-gons with total curvature below
    ``2 pi bridge`` (unknotted when ``bridge = 2``), from the exact mean and
    Fenchel's bound ``kappa >= 2 pi``."""
    return float(unknot_fraction_bound_exact(n, bridge))
