"""Seeded ensemble averaging of polygon functionals.

Work is cut into chunks whose size depends only on ``n``. Chunk ``c`` draws
from its own stream, ``(cfg.stream_id << 32) | c``, so the result depends
on ``(seed, stream_id, count)`` and never on how many threads ran the
chunks. Per-chunk statistics are merged in chunk order with
``math.fsum``; nothing but the running summaries is kept in memory.

The Markov chain measure is handled by running a fixed number of
independent chains (one stream each) instead of chunks.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from . import geometry as geo
from .errors import PolygonDomainError, SampleEvaluationError
from .samplers import EquilateralCrankshaft, SamplerConfig, make_sampler

EDGE_BUDGET = 1 << 20  # edges per chunk
DEFAULT_CHAINS = 4
Z95 = 1.959963984540054


# -- functionals ------------------------------------------------------------


@dataclass(frozen=True)
class Functional:
    """Batched polygon functional: ``fn(edges, closed) -> values``.

    ``from_curvature`` (optional) maps total curvature and ``n`` to the
    value, which lets the Markov chain skip materialising edge arrays.
    """

    label: str
    fn: Callable[[np.ndarray, bool], np.ndarray]
    from_curvature: Callable[[np.ndarray, int], np.ndarray] | None = None


def _edge_moment(p: float):
    def fn(edges, closed):
        return (np.linalg.norm(edges, axis=-1) ** p).mean(axis=1)

    return fn


def _chord(k: int):
    return lambda edges, closed: geo.batch_chord_squared_mean(edges, k, closed)


def _defect2(edges, closed):
    s = edges.sum(axis=1)
    return np.einsum("bi,bi->b", s, s)


def _turning(edges, closed):
    m = edges.shape[1] if closed else edges.shape[1] - 1
    return geo.batch_total_curvature(edges, closed) / m


def _surplus(edges, closed):
    return geo.batch_total_curvature(edges, closed) - math.pi * edges.shape[1] / 2


FUNCTIONAL_NAMES = (
    "curvature", "surplus", "turning-angle", "torsion", "length", "gyradius", "defect2",
    "edge-moment:<p>", "chord:<k>",
)


def resolve_functional(name: str | Functional) -> Functional:
    """Look a functional up by name; ``edge-moment:p`` and ``chord:k`` take a parameter."""
    if isinstance(name, Functional):
        return name
    base, _, arg = name.partition(":")
    if base == "curvature" and not arg:
        return Functional(name, geo.batch_total_curvature, lambda k, n: k)
    if base == "surplus" and not arg:
        return Functional(name, _surplus, lambda k, n: k - math.pi * n / 2)
    if base == "turning-angle" and not arg:
        return Functional(name, _turning, lambda k, n: k / n)
    if base == "torsion" and not arg:
        return Functional(name, lambda e, closed: geo.batch_total_torsion(e))
    if base == "length" and not arg:
        return Functional(name, lambda e, closed: geo.batch_total_length(e))
    if base == "gyradius" and not arg:
        return Functional(name, geo.batch_gyradius_squared)
    if base == "defect2" and not arg:
        return Functional(name, _defect2)
    if base == "edge-moment" and arg:
        return Functional(name, _edge_moment(float(arg)))
    if base == "chord" and arg:
        return Functional(name, _chord(int(arg)))
    raise ValueError(f"unknown functional {name!r}; choose from {', '.join(FUNCTIONAL_NAMES)}")


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    quantity: str
    n: int
    d: int
    sampler: str
    count: int
    mean: float
    stderr: float
    seed: int
    seconds: float
    std: float
    streams: int
    chunk_size: int
    stderr_batch: float | None = None  # batch-means error, Markov chain only

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CensusReport:
    n: int
    threshold: float  # multiple of 2 pi
    below: int
    total: int
    fraction: float
    ci_low: float
    ci_high: float
    seed: int
    seconds: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Moments:
    count: int
    total: float
    m2: float


def merge_moments(parts: Sequence[_Moments]) -> tuple[int, float, float]:
    """Merge chunk summaries; returns ``(count, mean, sum of squared deviations)``."""
    count = sum(p.count for p in parts)
    mean = math.fsum(p.total for p in parts) / count
    m2 = math.fsum([p.m2 for p in parts] + [p.count * (p.total / p.count - mean) ** 2 for p in parts])
    return count, mean, m2


def _moments(values: np.ndarray) -> _Moments:
    mu = float(values.mean())
    dev = values - mu
    return _Moments(values.size, math.fsum(values), math.fsum(dev * dev))


# -- chunk machinery --------------------------------------------------------


def chunk_size(n: int) -> int:
    return max(64, EDGE_BUDGET // max(n, 1))


def chunk_stream(base: int, index: int) -> int:
    return (int(base) << 32) | int(index)


def _plan(count: int, size: int) -> list[int]:
    full, rest = divmod(count, size)
    return [size] * full + ([rest] if rest else [])


def _locate_bad(edges: np.ndarray) -> int:
    norms = np.linalg.norm(edges, axis=-1)
    bad = np.flatnonzero((norms == 0).any(axis=1) | ~np.isfinite(edges).all(axis=(1, 2)))
    return int(bad[0]) if bad.size else -1


def _evaluate_chunk(f: Functional, cfg: SamplerConfig, index: int, size: int, reduce, law=None):
    stream = chunk_stream(cfg.stream_id, index)
    sampler = make_sampler(cfg.with_stream(stream), law)
    edges = sampler.batch(size)
    try:
        values = np.asarray(f.fn(edges, sampler.closed), dtype=np.float64)
    except PolygonDomainError as exc:
        i = exc.sample if exc.sample is not None else _locate_bad(edges)
        raise SampleEvaluationError(f"{f.label} failed on stream {stream}, sample {i}: {exc}", stream, i) from exc
    if not np.all(np.isfinite(values)):
        i = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SampleEvaluationError(f"{f.label} is not finite on stream {stream}, sample {i}", stream, i)
    return reduce(values)


def _map_chunks(job, sizes: list[int], workers: int) -> list:
    if workers <= 1 or len(sizes) == 1:
        return [job(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(len(sizes)), sizes))


def _chain_values(f: Functional, cfg: SamplerConfig, index: int, size: int, chain_kw: dict) -> np.ndarray:
    stream = chunk_stream(cfg.stream_id, index)
    chain = EquilateralCrankshaft(cfg.with_stream(stream), **chain_kw)
    if f.from_curvature is not None:
        return np.asarray(f.from_curvature(chain.curvature_trace(size), cfg.n), dtype=np.float64)
    return np.asarray(f.fn(chain.batch(size), True), dtype=np.float64)


def _batch_means_se(traces: list[np.ndarray], batches: int = 50) -> float:
    means = []
    for t in traces:
        b = min(batches, t.size)
        if b < 2:
            continue
        means.extend(x.mean() for x in np.array_split(t, b))
    means = np.asarray(means)
    if means.size < 2:
        return math.nan
    return float(means.std(ddof=1) / math.sqrt(means.size))


# -- public operations ------------------------------------------------------


def estimate(functional, sampler_cfg: SamplerConfig, count: int, workers: int = 1, law=None,
             chains: int = DEFAULT_CHAINS, **chain_kw) -> EstimateReport:
    """Ensemble mean of ``functional`` with its standard error ``sd / sqrt(count)``.

    For ``equilateral-mcmc`` the samples come from ``chains`` independent
    crankshaft chains and ``stderr_batch`` adds a batch-means error that
    accounts for autocorrelation.
    """
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    f = resolve_functional(functional)
    cfg = sampler_cfg
    t0 = time.perf_counter()
    se_batch = None
    if cfg.measure == "equilateral-mcmc":
        sizes = _plan(count, -(-count // chains))
        traces = _map_chunks(lambda i, s: _chain_values(f, cfg, i, s, chain_kw), sizes, workers)
        parts = [_moments(t) for t in traces]
        se_batch = _batch_means_se(traces)
        size = sizes[0]
        label = "equilateral-mcmc"
    else:
        size = chunk_size(cfg.n)
        sizes = _plan(count, size)
        parts = _map_chunks(lambda i, s: _evaluate_chunk(f, cfg, i, s, _moments, law), sizes, workers)
        label = make_sampler(cfg, law).label
    total, mean, m2 = merge_moments(parts)
    std = math.sqrt(m2 / (total - 1))
    return EstimateReport(
        quantity=f.label, n=cfg.n, d=cfg.d, sampler=label, count=total, mean=mean,
        stderr=std / math.sqrt(total), seed=cfg.seed, seconds=time.perf_counter() - t0,
        std=std, streams=len(sizes), chunk_size=size, stderr_batch=se_batch,
    )


def binomial_interval(below: int, total: int, z: float = Z95) -> tuple[float, float]:
    """Normal-approximation interval with continuity correction, clipped to [0, 1]."""
    p = below / total
    half = z * math.sqrt(p * (1 - p) / total) + 0.5 / total
    return max(0.0, p - half), min(1.0, p + half)


def curvature_census(n: int, threshold_multiple: float, count: int, seed: int = 0, workers: int = 1,
                     d: int = 3, stream_id: int = 0) -> CensusReport:
    """Fraction of symmetric-measure closed n-gons with ``kappa < threshold_multiple * 2 pi``."""
    if n < 3:
        raise ValueError(f"closed polygons need n >= 3, got {n}")
    if not threshold_multiple > 1:
        raise ValueError(f"threshold multiple must exceed 1, got {threshold_multiple}")
    if count < 1:
        raise ValueError("count must be positive")
    cfg = SamplerConfig(n, d, seed, stream_id, "symmetric-closed")
    f = resolve_functional("curvature")
    cut = threshold_multiple * 2 * math.pi
    t0 = time.perf_counter()
    sizes = _plan(count, chunk_size(n))
    below = sum(
        _map_chunks(lambda i, s: _evaluate_chunk(f, cfg, i, s, lambda v: int(np.count_nonzero(v < cut))), sizes, workers)
    )
    lo, hi = binomial_interval(below, count)
    return CensusReport(n, float(threshold_multiple), below, count, below / count, lo, hi, seed,
                        time.perf_counter() - t0)


@dataclass(frozen=True)
class SurplusRow:
    n: int
    mean_surplus: float
    stderr: float
    count: int
    seed: int


SURPLUS_HEADER = ("n", "mean_surplus", "stderr", "count", "seed")


def surplus_curve(n_range: Iterable[int], count: int, seed: int = 0, measure: str = "symmetric-closed",
                  workers: int = 1, **chain_kw) -> list[SurplusRow]:
    """Mean of ``kappa - pi n / 2`` for each ``n``.

    ``measure="equilateral-mcmc"`` uses the crankshaft chain; its ``stderr``
    column is then the batch-means error.
    """
    rows = []
    for n in n_range:
        if n < 3:
            raise ValueError(f"closed polygons need n >= 3, got {n}")
        rep = estimate("surplus", SamplerConfig(n, 3, seed, 0, measure), count, workers, **chain_kw)
        se = rep.stderr_batch if rep.stderr_batch is not None else rep.stderr
        rows.append(SurplusRow(n, rep.mean, se, rep.count, seed))
    return rows


def write_surplus_csv(rows: Iterable[SurplusRow], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SURPLUS_HEADER)
    for r in rows:
        w.writerow([r.n, format(r.mean_surplus, ".17g"), format(r.stderr, ".17g"), r.count, r.seed])
