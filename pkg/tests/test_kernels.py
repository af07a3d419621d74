import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from polylab import _fallback, kernels
from polylab.samplers import EquilateralCrankshaft, SamplerConfig, SymmetricClosedSampler, regular_polygon

compiled = pytest.importorskip("polylab._kernels") if kernels.BACKEND == "cython" else None
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


@needs_ext
@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("closed", [True, False])
def test_curvature_agrees(d, closed):
    edges = SymmetricClosedSampler(SamplerConfig(13, d=d, seed=1)).batch(500)
    np.testing.assert_allclose(
        compiled.total_curvature_batch(edges, closed), _fallback.total_curvature_batch(edges, closed), rtol=1e-13
    )


@needs_ext
def test_torsion_agrees():
    edges = SymmetricClosedSampler(SamplerConfig(9, seed=2)).batch(500)
    edges[0, 3] = edges[0, 2]  # a parallel pair
    np.testing.assert_allclose(compiled.total_torsion_batch(edges), _fallback.total_torsion_batch(edges), rtol=1e-12)


@needs_ext
def test_crankshaft_agrees():
    n = 12
    rng = np.random.default_rng(3)
    # the chain is chaotic: a one-ulp difference grows to O(1) within ~1000 moves
    i = rng.integers(0, n, 250)
    j = (i + rng.integers(1, n, 250)) % n
    phi = rng.uniform(0, 2 * np.pi, 250)
    e1 = np.ascontiguousarray(regular_polygon(n))
    e2 = e1.copy()
    out1 = np.empty(5)
    out2 = np.empty(5)
    s1 = compiled.crankshaft_run(e1, i, j, phi, 50, out1)
    s2 = _fallback.crankshaft_run(e2, i, j, phi, 50, out2)
    assert s1 == s2
    np.testing.assert_allclose(e1, e2, atol=1e-12)
    np.testing.assert_allclose(out1, out2, rtol=1e-8)  # arccos near +-1 amplifies roundoff


def test_crankshaft_preserves_constraints():
    chain = EquilateralCrankshaft(SamplerConfig(30, seed=7, measure="equilateral-mcmc"))
    chain.advance(20_000)
    e = chain.edges
    np.testing.assert_allclose(np.linalg.norm(e, axis=1), 1.0, atol=1e-10)
    assert np.linalg.norm(e.sum(axis=0)) <= 1e-10


def test_backend_selection_env():
    code = "import polylab.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, POLYLAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("cython", "python")


def test_backends_give_same_chain():
    """Moves are drawn in numpy, so both backends follow the same trajectory."""
    code = (
        "from polylab.samplers import EquilateralCrankshaft, SamplerConfig;"
        "c = EquilateralCrankshaft(SamplerConfig(10, seed=11, measure='equilateral-mcmc'));"
        "print(float(c.curvature_trace(30).sum()))"
    )
    vals = []
    for pure in ("0", "1"):
        env = dict(os.environ, POLYLAB_PURE=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-8)
