import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from polylab import hopf
from polylab.geometry import closure_defect, total_length
from polylab.samplers import SamplerConfig, SymmetricClosedSampler

quat = arrays(np.float64, 4, elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False))


def test_examples():
    np.testing.assert_array_equal(hopf.hopf_map([1, 0, 0, 0]), [1, 0, 0])
    np.testing.assert_array_equal(hopf.hopf_map([0, 0, 1, 0]), [-1, 0, 0])
    v = hopf.hopf_map([1, 1, 1, 1])
    np.testing.assert_array_equal(v, [0, 0, 4])
    assert np.linalg.norm(v) == 4


def test_complex_examples():
    np.testing.assert_array_equal(hopf.hopf_map_complex(1, 0), [1, 0, 0])
    np.testing.assert_array_equal(hopf.hopf_map_complex(0, 1), [-1, 0, 0])
    np.testing.assert_allclose(hopf.hopf_map_complex(1 + 1j, 1 - 1j), [0, 4, 0], atol=1e-15)
    # a + b j with a = q0 + q1 i, b = q2 + q3 i
    np.testing.assert_allclose(hopf.hopf_map_complex(1 + 1j, 1 - 1j), hopf.hopf_map([1, 1, 1, -1]), atol=1e-15)


def test_norm_identity_bulk(rng):
    q = rng.standard_normal((1_000_000, 4)) * rng.exponential(1.0, (1_000_000, 1))
    v = hopf.hopf_map(q)
    n2 = np.einsum("ij,ij->i", q, q)
    assert np.max(np.abs(np.linalg.norm(v, axis=1) - n2) / n2) <= 1e-12


def test_complex_matches_quaternion_bulk(rng):
    q = rng.standard_normal((1_000_000, 4))
    a = q[:, 0] + 1j * q[:, 1]
    b = q[:, 2] + 1j * q[:, 3]
    v1 = hopf.hopf_map(q)
    v2 = hopf.hopf_map_complex(a, b)
    scale = np.einsum("ij,ij->i", q, q)[:, None]
    assert np.max(np.abs(v1 - v2) / scale) <= 4 * np.finfo(float).eps


@given(quat, quat)
def test_equivariance(q, w):
    if np.linalg.norm(w) < 1e-3:
        return
    w = w / np.linalg.norm(w)
    lhs = hopf.hopf_map(hopf.qmul(q, w))
    rhs = hopf.rotate(w, hopf.hopf_map(q))
    scale = max(1.0, float(q @ q))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * scale)


def test_equivariance_bulk(rng):
    q = rng.standard_normal((10_000, 4))
    w = rng.standard_normal((10_000, 4))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    np.testing.assert_allclose(hopf.hopf_map(hopf.qmul(q, w)), hopf.rotate(w, hopf.hopf_map(q)), atol=1e-10)


def test_hamilton_convention():
    i, j, k = np.eye(4)[1:]
    np.testing.assert_array_equal(hopf.qmul(i, j), k)
    np.testing.assert_array_equal(hopf.qmul(j, i), -k)
    np.testing.assert_array_equal(hopf.qmul(i, i), [-1, 0, 0, 0])


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_real_pair_lands_in_plane(a, b):
    v = hopf.hopf_map([a, 0.0, b, 0.0])
    assert v[1] == 0.0
    assert v[0] == a * a - b * b
    assert v[2] == 2 * a * b


def test_planar_matches_eq7_image():
    x = np.array([1.0, 1.0, 0.3, 0.0])
    y = np.array([0.0, 1.0, -2.0, 0.0])
    first = hopf.hopf_map_planar(x, y, "first")
    full = hopf.hopf_map(np.stack([x, 0 * x, y, 0 * x], axis=1))
    # the i-k image of Eq. 7 is (first, third) up to the orientation of the copy
    np.testing.assert_allclose(first[:, 0], full[:, 0])
    np.testing.assert_allclose(np.abs(first[:, 1]), np.abs(full[:, 2]))
    second = hopf.hopf_map_planar(x, y, "second")
    np.testing.assert_allclose(second[:, 1], -first[:, 1])
    np.testing.assert_array_equal(first[3], [0, 0])


def test_planar_examples():
    np.testing.assert_array_equal(hopf.hopf_map_planar([1.0], [0.0]), [[1.0, 0.0]])
    e = hopf.hopf_map_planar([1.0], [1.0])
    assert np.linalg.norm(e) == pytest.approx(2.0)


def test_planar_errors():
    with pytest.raises(ValueError):
        hopf.hopf_map_planar([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        hopf.hopf_map_planar([1.0], [1.0], "third")


def test_coordinatewise(rng):
    arm = hopf.coordinatewise_hopf([1, 0, 0, 0])
    np.testing.assert_array_equal(arm.edges, [[1, 0, 0]])
    q = rng.standard_normal((7, 4))
    q *= np.sqrt(2 / 7) / np.linalg.norm(q, axis=1, keepdims=True)
    assert total_length(hopf.coordinatewise_hopf(q)) == pytest.approx(2.0, abs=1e-14)


def test_frame_closes(rng):
    s = SymmetricClosedSampler(SamplerConfig(12, seed=5))
    from polylab.samplers import _orthonormal_pairs

    u, v = _orthonormal_pairs(s.rng, 50, 12, True, {})
    q = np.stack([u.real, u.imag, v.real, v.imag], axis=-1)
    for row in q:
        arm = hopf.coordinatewise_hopf(row)
        assert np.linalg.norm(closure_defect(arm)) <= 1e-12
