"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one row per kernel with the best wall time of each backend and the
speedup. Both backends see identical inputs; the curvature results are
also compared.
"""
import argparse
import time

import numpy as np

from polylab import _fallback
from polylab.samplers import SamplerConfig, make_sampler, regular_polygon

try:
    from polylab import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def crankshaft_inputs(n, moves, seed=0):
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, moves, dtype=np.int64)
    j = rng.integers(0, n - 1, moves, dtype=np.int64)
    j += j >= i
    return i, j, rng.uniform(0, 2 * np.pi, moves)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=20_000)
    ap.add_argument("--moves", type=int, default=20_000)
    args = ap.parse_args()

    if _kernels is None:
        print("compiled extension not available; nothing to compare")
        return 1

    rows = []
    for n in (6, 64):
        e = np.ascontiguousarray(make_sampler(SamplerConfig(n, seed=1)).batch(args.batch))
        a = _kernels.total_curvature_batch(e, True)
        b = _fallback.total_curvature_batch(e, True)
        gap = float(np.max(np.abs(a - b)))
        rows.append((f"curvature n={n} x{args.batch}",
                     best_of(lambda: _kernels.total_curvature_batch(e, True), args.repeat),
                     best_of(lambda: _fallback.total_curvature_batch(e, True), args.repeat), gap))
        rows.append((f"torsion n={n} x{args.batch}",
                     best_of(lambda: _kernels.total_torsion_batch(e), args.repeat),
                     best_of(lambda: _fallback.total_torsion_batch(e), args.repeat), None))

    n = 200
    i, j, phi = crankshaft_inputs(n, args.moves)

    def chain(mod):
        edges = np.ascontiguousarray(regular_polygon(n))
        out = np.empty(args.moves // n)
        mod.crankshaft_run(edges, i, j, phi, n, out)

    # the pure-Python chain is slow; one pass is enough to see the ratio
    rows.append((f"crankshaft n={n} x{args.moves} moves",
                 best_of(lambda: chain(_kernels), args.repeat),
                 best_of(lambda: chain(_fallback), 1), None))

    print(f"{'kernel':36s} {'cython [s]':>12s} {'fallback [s]':>13s} {'speedup':>9s} {'max gap':>9s}")
    for name, tc, tp, gap in rows:
        g = "" if gap is None else f"{gap:.1e}"
        print(f"{name:36s} {tc:12.5f} {tp:13.5f} {tp / tc:9.1f} {g:>9s}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
