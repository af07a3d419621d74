"""Seeded random polygon generators.

Every sampler owns a ``numpy.random.Generator`` built from
``(seed, stream_id)`` through a ``SeedSequence`` spawn key, so distinct
stream ids give non-overlapping streams and equal ``(seed, stream_id)``
reproduce the same samples bit for bit.

Samplers produce edge stacks of shape ``(size, n, d)`` via ``batch``;
``sample`` wraps a single draw as a polygon object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .geometry import ClosedPolygon, PolygonArm
from .hopf import hopf_map, hopf_map_complex, hopf_map_planar

MEASURES = ("hopf-gaussian-arm", "hopf-gaussian-closed", "symmetric-closed", "equilateral-mcmc")

# residual norm below which a second frame vector is treated as dependent
FRAME_DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class SamplerConfig:
    n: int
    d: int = 3
    seed: int = 0
    stream_id: int = 0
    measure: str = "symmetric-closed"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")

    def with_stream(self, stream_id: int) -> "SamplerConfig":
        return SamplerConfig(self.n, self.d, self.seed, stream_id, self.measure)


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(stream_id) & (2**64 - 1),))
    return np.random.Generator(np.random.PCG64DXSM(ss))


# -- radial laws ------------------------------------------------------------


@dataclass(frozen=True)
class RadialDensity:
    """Spherically symmetric edge law described by its radial part.

    ``sample(rng, size)`` draws edge lengths, ``moment(p)`` is ``E r^p`` and
    ``density`` (optional) is the radial pdf ``f(r)``, integrating to 1 on
    ``[0, inf)``.
    """

    label: str
    sample: Callable[[np.random.Generator, tuple], np.ndarray]
    moment: Callable[[int], float]
    density: Callable[[np.ndarray], np.ndarray] | None = None

    def moments(self) -> tuple[float, float, float]:
        return self.moment(1), self.moment(2), self.moment(3)


def _chi_law(k: int) -> RadialDensity:
    # length of a standard normal vector in R^k
    def moment(p):
        return 2 ** (p / 2) * math.gamma((k + p) / 2) / math.gamma(k / 2)

    def density(r):
        r = np.asarray(r, dtype=float)
        return r ** (k - 1) * np.exp(-r * r / 2) / (2 ** (k / 2 - 1) * math.gamma(k / 2))

    return RadialDensity(f"chi{k}", lambda rng, size: np.sqrt(rng.chisquare(k, size)), moment, density)


def _chi2_law(k: int) -> RadialDensity:
    # chi-squared radius with k degrees of freedom
    def moment(p):
        return 2**p * math.gamma(k / 2 + p) / math.gamma(k / 2)

    def density(r):
        r = np.asarray(r, dtype=float)
        return r ** (k / 2 - 1) * np.exp(-r / 2) / (2 ** (k / 2) * math.gamma(k / 2))

    return RadialDensity(f"chi2-{k}", lambda rng, size: rng.chisquare(k, size), moment, density)


EQUILATERAL = RadialDensity("equilateral", lambda rng, size: np.ones(size), lambda p: 1.0)

RADIAL_LAWS: dict[str, RadialDensity] = {
    "equilateral": EQUILATERAL,
    "chi2-4": _chi2_law(4),
    "chi2-2": _chi2_law(2),
    "gaussian": _chi_law(3),
    "gaussian2": _chi_law(2),
}


def radial_law(name: str) -> RadialDensity:
    try:
        return RADIAL_LAWS[name]
    except KeyError:
        raise ValueError(f"unknown radial law {name!r}; choose from {sorted(RADIAL_LAWS)}") from None


def uniform_directions(rng: np.random.Generator, shape: tuple, d: int) -> np.ndarray:
    g = rng.standard_normal(shape + (d,))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


# -- samplers ---------------------------------------------------------------


class _Sampler:
    closed = False

    def __init__(self, cfg: SamplerConfig):
        self.cfg = cfg
        self.rng = make_rng(cfg.seed, cfg.stream_id)
        self.diagnostics: dict[str, int] = {}

    @property
    def label(self) -> str:
        return self.cfg.measure

    def batch(self, size: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self):
        e = self.batch(1)[0]
        return ClosedPolygon(e) if self.closed else PolygonArm(e)


class HopfGaussianArmSampler(_Sampler):
    """Hopf image of iid standard Gaussian quaternions (d=3) or of a
    standard Gaussian in one of the two planar copies (d=2)."""

    def batch(self, size):
        n, d = self.cfg.n, self.cfg.d
        if d == 3:
            return hopf_map(self.rng.standard_normal((size, n, 4)))
        xy = self.rng.standard_normal((size, 2, n))
        edges = hopf_map_planar(xy[:, 0], xy[:, 1], "first")
        flip = self.rng.random(size) < 0.5
        edges[flip, :, 1] *= -1.0
        return edges


def _orthonormal_pairs(rng, size, n, complex_: bool, diag: dict):
    """Rows ``(u, v)`` of a (Hermitian) orthonormal 2-frame, Gaussian-seeded."""

    def draw(m):
        if complex_:
            g = rng.standard_normal((m, 2, 2, n))
            return g[:, :, 0] + 1j * g[:, :, 1]
        return rng.standard_normal((m, 2, n))

    uv = draw(size)
    todo = np.arange(size)
    u_out = np.empty((size, n), dtype=uv.dtype)
    v_out = np.empty((size, n), dtype=uv.dtype)
    while todo.size:
        u = uv[:, 0]
        v = uv[:, 1]
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        # modified Gram-Schmidt with one re-orthogonalization pass
        for _ in range(2):
            v = v - np.sum(np.conj(u) * v, axis=1, keepdims=True) * u
        res = np.linalg.norm(v, axis=1)
        good = res >= FRAME_DEGENERACY_TOL
        v = v[good] / res[good, None]
        u_out[todo[good]] = u[good]
        v_out[todo[good]] = v
        todo = todo[~good]
        if todo.size:
            diag["resampled_frames"] = diag.get("resampled_frames", 0) + int(todo.size)
            uv = draw(todo.size)
    return u_out, v_out


class SymmetricClosedSampler(_Sampler):
    """Closed polygons of total length 2 from random Stiefel 2-frames."""

    closed = True

    def __init__(self, cfg):
        if cfg.n < 3:
            raise ValueError(f"closed polygons need n >= 3, got {cfg.n}")
        super().__init__(cfg)

    def batch(self, size):
        n, d = self.cfg.n, self.cfg.d
        if d == 3:
            u, v = _orthonormal_pairs(self.rng, size, n, True, self.diagnostics)
            return hopf_map_complex(u, v)
        x, y = _orthonormal_pairs(self.rng, size, n, False, self.diagnostics)
        edges = hopf_map_planar(x, y, "first")
        flip = self.rng.random(size) < 0.5
        edges[flip, :, 1] *= -1.0
        return edges


class HopfGaussianClosedSampler(SymmetricClosedSampler):
    """Closed Hopf-Gaussian polygons: a symmetric-measure polygon scaled to
    an independent chi-squared total length.

    Conditioning the Gaussian arm on closure (the disintegration behind the
    single-edge and pair densities) removes ``d`` constraints of degree 2,
    which costs ``2 d`` degrees of freedom: the length law is chi-squared
    with ``2^(d-1) n - 2 d`` of them (``4n - 6`` in space).
    """

    def __init__(self, cfg):
        super().__init__(cfg)
        self.length_dof = 2 ** (cfg.d - 1) * cfg.n - 2 * cfg.d

    def batch(self, size):
        edges = super().batch(size)
        length = self.rng.chisquare(self.length_dof, size)
        return edges * (length / 2.0)[:, None, None]


class GeneratedArmSampler(_Sampler):
    """Arms with iid edges: uniform direction times a radius from ``law``."""

    def __init__(self, cfg, law: RadialDensity):
        super().__init__(cfg)
        self.law = law

    @property
    def label(self):
        return f"radial:{self.law.label}"

    def batch(self, size):
        n, d = self.cfg.n, self.cfg.d
        dirs = uniform_directions(self.rng, (size, n), d)
        r = self.law.sample(self.rng, (size, n))
        return dirs * r[..., None]


def regular_polygon(n: int) -> np.ndarray:
    """Unit-edge regular planar n-gon embedded in R^3."""
    t = 2 * np.pi * np.arange(n) / n
    return np.stack([np.cos(t), np.sin(t), np.zeros(n)], axis=1)


class EquilateralCrankshaft(_Sampler):
    """Markov chain on closed equilateral space polygons.

    Each move picks two distinct vertices and rotates the shorter of the two
    sub-chains between them about the chord joining them by a uniform
    angle. Rotated edges are renormalised to unit length.

    ``burn_in`` and ``thin`` are counted in moves and default to ``10 n``
    and ``n``.
    """

    closed = True
    CHUNK = 1 << 18

    def __init__(self, cfg, burn_in: int | None = None, thin: int | None = None):
        if cfg.n < 4:
            raise ValueError(f"crankshaft moves need n >= 4, got {cfg.n}")
        if cfg.d != 3:
            raise ValueError("the equilateral chain is implemented for space polygons only")
        super().__init__(cfg)
        self.burn_in = 10 * cfg.n if burn_in is None else int(burn_in)
        self.thin = cfg.n if thin is None else int(thin)
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        self.edges = np.ascontiguousarray(regular_polygon(cfg.n))
        self.diagnostics = {"moves": 0, "skipped_moves": 0}
        self._burned = False

    def _moves(self, count):
        n = self.cfg.n
        i = self.rng.integers(0, n, count, dtype=np.int64)
        j = self.rng.integers(0, n - 1, count, dtype=np.int64)
        j += j >= i
        phi = self.rng.uniform(0.0, 2 * np.pi, count)
        return i, j, phi

    def advance(self, moves: int, record_every: int = 0) -> np.ndarray:
        """Run ``moves`` moves; return total curvature every ``record_every`` moves."""
        out = np.empty(moves // record_every if record_every else 0)
        done = 0
        rec = 0
        while done < moves:
            m = min(self.CHUNK, moves - done)
            if record_every:
                m = max(record_every, m - m % record_every)
                m = min(m, moves - done)
            i, j, phi = self._moves(m)
            nrec = m // record_every if record_every else 0
            buf = np.empty(nrec)
            skipped = kernels.crankshaft_run(self.edges, i, j, phi, record_every, buf)
            out[rec : rec + nrec] = buf
            rec += nrec
            done += m
            self.diagnostics["moves"] += m
            self.diagnostics["skipped_moves"] += int(skipped)
        return out

    def _burn(self):
        if not self._burned:
            self.advance(self.burn_in)
            self._burned = True

    def curvature_trace(self, count: int) -> np.ndarray:
        """Total curvature of ``count`` successive thinned states (after burn-in)."""
        self._burn()
        return self.advance(count * self.thin, record_every=self.thin)

    def batch(self, size):
        self._burn()
        out = np.empty((size, self.cfg.n, 3))
        for b in range(size):
            self.advance(self.thin)
            out[b] = self.edges
        return out


def make_sampler(cfg: SamplerConfig, law: RadialDensity | str | None = None, **kw) -> _Sampler:
    """Build the sampler named by ``cfg.measure`` (``radial:<name>`` for generated arms)."""
    m = cfg.measure
    if m == "hopf-gaussian-arm":
        return HopfGaussianArmSampler(cfg)
    if m == "symmetric-closed":
        return SymmetricClosedSampler(cfg)
    if m == "hopf-gaussian-closed":
        return HopfGaussianClosedSampler(cfg)
    if m == "equilateral-mcmc":
        return EquilateralCrankshaft(cfg, **kw)
    if m.startswith("radial:") or law is not None:
        if law is None:
            law = m.split(":", 1)[1]
        if isinstance(law, str):
            law = radial_law(law)
        return GeneratedArmSampler(cfg, law)
    raise ValueError(f"unknown measure {m!r}")


def sample_hopf_gaussian_arm(cfg: SamplerConfig) -> PolygonArm:
    return HopfGaussianArmSampler(cfg).sample()


def sample_symmetric_closed(cfg: SamplerConfig) -> ClosedPolygon:
    return SymmetricClosedSampler(cfg).sample()


def sample_generated_arm(cfg: SamplerConfig, law: RadialDensity) -> PolygonArm:
    return GeneratedArmSampler(cfg, law).sample()


def sample_equilateral_closed_mcmc(cfg: SamplerConfig, n_steps: int, burn_in: int | None = None):
    """Yield ``n_steps`` thinned closed equilateral polygons from the crankshaft chain."""
    chain = EquilateralCrankshaft(cfg, burn_in=burn_in)
    chain._burn()
    for _ in range(n_steps):
        chain.advance(chain.thin)
        yield ClosedPolygon(chain.edges.copy())
