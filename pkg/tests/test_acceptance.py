"""Acceptance checks, one per criterion.

Each check returns ``(ok, detail)`` and prints a single ``PASS``/``FAIL``
line. Run under pytest, or directly with ``python3 tests/test_acceptance.py
[numbers...]`` to get just the summary lines.
"""
import io
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

import oracles  # noqa: E402
from polylab import analytic as A  # noqa: E402
from polylab import cli, hopf  # noqa: E402
from polylab import geometry as geo  # noqa: E402
from polylab import montecarlo as mc  # noqa: E402
from polylab.quadrature import (  # noqa: E402
    QuadratureSpec,
    expected_turning_angle_numeric,
    integrate_pairwise_normalization,
    integrate_radial_density,
)
from polylab.samplers import SamplerConfig, make_sampler  # noqa: E402

SUMMARY: list[str] = []


def report(num: int, title: str, ok: bool, detail: str, seconds: float) -> str:
    line = f"criterion {num} {'PASS' if ok else 'FAIL'}: {title} ({detail}; {seconds:.1f}s)"
    SUMMARY.append(line)
    print(line, flush=True)
    return line


# -- 1: exact formulas --------------------------------------------------------


def check_exact():
    t0 = time.perf_counter()
    ok = A.exact_expected_total_curvature(3) == 2 * math.pi
    worst = 0.0
    for n in range(3, 501):
        k = A.exact_expected_total_curvature(n)
        worst = max(worst, abs(n * A.exact_expected_turning_angle(n) - k) / k)
    dt = time.perf_counter() - t0
    ok = ok and worst <= 1e-14 and dt < 1.0
    return ok, f"E kappa(3) = 2 pi exactly, worst relative gap {worst:.1e} over n = 3..500"


# -- 2: quadrature against the closed form -----------------------------------


def check_quadrature():
    t0 = time.perf_counter()
    worst = math.inf
    for n in range(5, 26):
        res = expected_turning_angle_numeric(A.AnalyticContext(n))
        exact = math.pi * (n - 1) / (2 * n - 3)
        worst = min(worst, cli.correct_digits(res.value, exact))
    dt = time.perf_counter() - t0
    return worst >= 9 and dt < 120, f"fewest correct digits {worst:.2f} over n = 5..25"


# -- 3: normalisation ---------------------------------------------------------


def check_normalization():
    t0 = time.perf_counter()
    spec = QuadratureSpec(rtol=1e-12, atol=1e-14)
    gaps = {}
    for n in (4, 6, 10, 50):
        ctx = A.AnalyticContext(n)
        gaps[f"pair({n})"] = abs(integrate_pairwise_normalization(ctx, spec).value - 1)
        gaps[f"edge({n})"] = abs(integrate_radial_density(lambda r: A.single_edge_pdf(ctx, r), spec).value - 1)
    for k in (2, 3, 5, 10):
        gaps[f"G_{k}"] = abs(integrate_radial_density(lambda r: A.green_function(k, r), spec).value - 1)
    worst_mass = max(gaps.values())
    worst_origin = max(
        abs(float(A.green_function(n, 0.0)) - A.hausdorff_constant(n)) / A.hausdorff_constant(n)
        for n in range(4, 13)
    )
    dt = time.perf_counter() - t0
    ok = worst_mass <= 1e-9 and worst_origin <= 1e-12 and dt < 60
    return ok, f"worst mass gap {worst_mass:.1e}, worst G_n(0)/C_n gap {worst_origin:.1e}"


# -- 4: sampler against closed forms -----------------------------------------


def mc_cases():
    cases = []
    for n in (4, 6, 10, 64):
        cases.append(("curvature", SamplerConfig(n, seed=40 + n), A.exact_expected_total_curvature(n)))
    hg = A.closed_polygon_expectations(10)
    closed = lambda s: SamplerConfig(10, 3, s, 0, "hopf-gaussian-closed")  # noqa: E731
    cases.append(("edge-moment:2", closed(1), hg.edge_moment(2)))
    for k in range(1, 10):
        cases.append((f"chord:{k}", closed(10 + k), hg.chord(k)))
    cases.append(("gyradius", closed(2), hg.gyradius))
    for d in (2, 3):
        arm = lambda s: SamplerConfig(8, d, s, 0, "hopf-gaussian-arm")  # noqa: E731
        for p in (1, 2, 3, 4):
            cases.append((f"edge-moment:{p}", arm(100 * d + p), float(A.arm_edge_moment(d, p))))
        cases.append(("chord:3", arm(100 * d + 7), A.arm_chord_expectation(d, 3)))
        cases.append(("gyradius", arm(100 * d + 8), A.arm_gyradius_expectation(d, 8)))
    return cases


def check_monte_carlo(count=1_000_000):
    t0 = time.perf_counter()
    misses = []
    worst = 0.0
    cases = mc_cases()
    for name, cfg, exact in cases:
        rep = mc.estimate(name, cfg, count)
        z = abs(rep.mean - exact) / rep.stderr
        worst = max(worst, z)
        if z > 4:
            misses.append(f"{name}/{cfg.measure}/n={cfg.n}/d={cfg.d}: {z:.2f} SE")
    dt = time.perf_counter() - t0
    detail = f"{len(cases)} cases at {count} samples, largest deviation {worst:.2f} SE"
    if misses:
        detail += "; misses " + ", ".join(misses)
    return not misses and dt < 300, detail


# -- 5: curvature census ------------------------------------------------------


def check_census(count=5_000_000):
    t0 = time.perf_counter()
    a = mc.curvature_census(6, 2.0, count, seed=6)
    b = mc.curvature_census(7, 2.0, count, seed=7)
    dt = time.perf_counter() - t0
    ok = abs(a.fraction - 0.914) <= 0.004 and abs(b.fraction - 0.63) <= 0.005 and dt < 300
    return ok, f"n=6: {a.fraction:.4f}, n=7: {b.fraction:.4f} from {count} samples each"


# -- 6: equilateral asymptote -------------------------------------------------


def check_equilateral(count=2_500_000, n=200):
    t0 = time.perf_counter()
    rep = mc.estimate("surplus", SamplerConfig(n, 3, 2024, 0, "equilateral-mcmc"), count)
    dt = time.perf_counter() - t0
    target = 3 * math.pi / 8
    ess = count * (rep.stderr / rep.stderr_batch) ** 2
    ok = abs(rep.mean - target) <= 0.05 and ess >= 1e6 and dt < 600
    return ok, (f"surplus {rep.mean:.4f} +/- {rep.stderr_batch:.4f} (batch means) vs 3pi/8 = {target:.4f}; "
                f"{rep.count} thinned states, batch-means effective size {ess:.2e}")


# -- 7: property suites -------------------------------------------------------


def check_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    notes = []

    q = rng.standard_normal((200_000, 4)) * rng.exponential(1.0, (200_000, 1))
    v = hopf.hopf_map(q)
    n2 = np.einsum("ij,ij->i", q, q)
    norm_gap = np.max(np.abs(np.linalg.norm(v, axis=1) - n2) / n2)
    w = rng.standard_normal((200_000, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    eq_gap = np.max(np.abs(hopf.hopf_map(hopf.qmul(q, w)) - hopf.rotate(w, v)) / n2[:, None])
    hopf_ok = norm_gap <= 1e-10 and eq_gap <= 1e-10
    notes.append(f"hopf {max(norm_gap, eq_gap):.1e}")

    fenchel_ok = True
    for measure, d in (("symmetric-closed", 3), ("symmetric-closed", 2), ("hopf-gaussian-closed", 3)):
        for n in (3, 5, 12):
            e = make_sampler(SamplerConfig(n, d, n, 0, measure)).batch(20_000)
            # arccos near +-1 costs up to sqrt(eps) per vertex
            fenchel_ok &= bool(np.all(geo.batch_total_curvature(e) >= 2 * math.pi - 5e-8))
    notes.append("fenchel ok" if fenchel_ok else "fenchel violated")

    pvals = [oracles.convolution_gof(k1, k2, size=1_000_000, seed=k1 * 10 + k2)[1] for k1, k2 in ((1, 1), (2, 3))]
    gof_ok = min(pvals) > 1e-3
    notes.append(f"gof p min {min(pvals):.3f}")

    lord = max(oracles.lord_residual(k, r) for k in (1, 2, 5) for r in (0.5, 1.0, 2.0, 5.0))
    notes.append(f"lord {lord:.1e}")

    bessel = 0.0
    for m in range(0, 30):
        for u in (0.05, 0.7, 3.0, 20.0):
            nu = m + 1.5
            lhs = float(A.bessel_k_half(m + 1, u))
            rhs = float(A.bessel_k_half(m - 1, u)) + (2 * nu - 2) / u * float(A.bessel_k_half(m, u))
            bessel = max(bessel, abs(lhs - rhs) / lhs)
    for u in (0.05, 0.7, 3.0, 20.0):
        # K_{-nu} = K_nu: orders -1/2 and 1/2
        bessel = max(bessel, abs(float(A.bessel_k_half(-1, u)) - float(A.bessel_k_half(0, u))) / float(A.bessel_k_half(0, u)))
    notes.append(f"bessel {bessel:.1e}")

    outs = []
    for _ in range(2):
        buf = io.StringIO()
        e = make_sampler(SamplerConfig(9, 3, 123, 4, "symmetric-closed")).batch(500)
        geo.write_polygons_csv(e, buf)
        outs.append(buf.getvalue().encode())
    runs = [mc.estimate("curvature", SamplerConfig(9, seed=5), 50_000, workers=w).mean for w in (1, 3)]
    repro_ok = outs[0] == outs[1] and runs[0] == runs[1]
    notes.append("bytes identical" if repro_ok else "bytes differ")

    ok = hopf_ok and fenchel_ok and gof_ok and lord <= 1e-8 and bessel <= 1e-12 and repro_ok
    return ok, ", ".join(notes)


CRITERIA = {
    1: ("exact formula suite", check_exact),
    2: ("quadrature vs closed form", check_quadrature),
    3: ("normalization suite", check_normalization),
    4: ("sampler vs formula", check_monte_carlo),
    5: ("curvature census", check_census),
    6: ("equilateral asymptote", check_equilateral),
    7: ("property suites", check_properties),
}


def run_criterion(num: int) -> bool:
    title, fn = CRITERIA[num]
    t0 = time.perf_counter()
    ok, detail = fn()
    report(num, title, ok, detail, time.perf_counter() - t0)
    return ok


@pytest.mark.parametrize(
    "num",
    [pytest.param(k, marks=pytest.mark.slow) if k in (4, 5, 6) else k for k in CRITERIA],
    ids=[f"criterion{k}" for k in CRITERIA],
)
def test_criterion(num):
    assert run_criterion(num), SUMMARY[-1]


if __name__ == "__main__":
    chosen = [int(a) for a in sys.argv[1:]] or list(CRITERIA)
    results = [run_criterion(k) for k in chosen]
    sys.exit(0 if all(results) else 1)
