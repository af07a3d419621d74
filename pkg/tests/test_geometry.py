import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from polylab import geometry as geo
from polylab.errors import PolygonDomainError, UnsupportedDimensionError
from polylab.samplers import SamplerConfig, SymmetricClosedSampler

from conftest import random_rotation

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = arrays(np.float64, 3, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def square():
    return geo.ClosedPolygon([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]])


class TestTurningAngle:
    def test_examples(self):
        assert geo.turning_angle([1, 0, 0], [1, 0, 0]) == 0.0
        assert geo.turning_angle([1, 0, 0], [-1, 0, 0]) == math.pi
        assert geo.turning_angle([1, 0, 0], [0, 2, 0]) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_clamps_roundoff(self):
        e = np.array([0.1, 0.2, 0.3])
        assert geo.turning_angle(e, 3 * e) == pytest.approx(0.0, abs=1e-7)
        assert geo.turning_angle(e, -7 * e) == pytest.approx(math.pi, abs=1e-7)

    def test_zero_edge(self):
        with pytest.raises(PolygonDomainError):
            geo.turning_angle([0, 0, 0], [1, 0, 0])

    @given(vec3, vec3, st.floats(0.01, 100))
    def test_symmetric_and_scale_invariant(self, a, b, s):
        t = geo.turning_angle(a, b)
        assert 0 <= t <= math.pi
        assert geo.turning_angle(b, a) == pytest.approx(t, abs=1e-12)
        assert geo.turning_angle(s * a, b) == pytest.approx(t, abs=1e-7)

    def test_rotation_invariant(self, rng):
        for _ in range(50):
            a, b = rng.standard_normal((2, 3))
            r = random_rotation(rng)
            assert geo.turning_angle(r @ a, r @ b) == pytest.approx(geo.turning_angle(a, b), abs=1e-12)


class TestPolygons:
    def test_closed_validation(self):
        with pytest.raises(ValueError):
            geo.ClosedPolygon([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        with pytest.raises(ValueError):
            geo.ClosedPolygon([[1, 0, 0], [-1, 0, 0]])
        with pytest.raises(ValueError):
            geo.PolygonArm([[np.nan, 0, 0]])
        with pytest.raises(UnsupportedDimensionError):
            geo.PolygonArm([[1, 0, 0, 0]])

    def test_edges_are_immutable(self):
        p = square()
        with pytest.raises(ValueError):
            p.edges[0, 0] = 5

    def test_vertices(self):
        assert geo.PolygonArm([[1, 0], [0, 1]]).vertices().tolist() == [[0, 0], [1, 0], [1, 1]]
        assert square().vertices().shape == (4, 3)


class TestCurvature:
    def test_triangle_and_square(self, rng):
        for _ in range(20):
            a, b = rng.standard_normal((2, 3))
            tri = geo.ClosedPolygon([a, b, -a - b])
            assert geo.total_curvature(tri) == pytest.approx(2 * math.pi, abs=1e-12)
        assert geo.total_curvature(square()) == pytest.approx(2 * math.pi, abs=1e-15)

    def test_straight_arm(self):
        assert geo.total_curvature(geo.PolygonArm([[1, 1, 0]] * 5)) == 0.0
        assert geo.total_curvature(geo.PolygonArm([[1, 1, 0]])) == 0.0

    def test_zero_edge_names_index(self):
        p = geo.PolygonArm([[1, 0, 0], [0, 1, 0], [0, 0, 0]])
        with pytest.raises(PolygonDomainError) as exc:
            geo.total_curvature(p)
        assert exc.value.index == 2

    def test_fenchel_cyclic_and_rotation(self, rng):
        edges = SymmetricClosedSampler(SamplerConfig(9, seed=4)).batch(200)
        k = geo.batch_total_curvature(edges)
        assert np.all(k >= 2 * math.pi - 5e-8)
        rolled = np.roll(edges, 3, axis=1)
        np.testing.assert_allclose(geo.batch_total_curvature(rolled), k, rtol=1e-13)
        r = random_rotation(rng)
        np.testing.assert_allclose(geo.batch_total_curvature(edges @ r.T), k, rtol=1e-12)

    def test_batch_matches_scalar(self):
        edges = SymmetricClosedSampler(SamplerConfig(7, seed=2)).batch(5)
        for e in edges:
            p = geo.ClosedPolygon(e)
            manual = sum(geo.turning_angle(e[i], e[(i + 1) % 7]) for i in range(7))
            assert geo.total_curvature(p) == pytest.approx(manual, abs=1e-12)
            arm = geo.PolygonArm(e)
            assert geo.total_curvature(arm) == pytest.approx(manual - geo.turning_angle(e[6], e[0]), abs=1e-12)

    def test_planar(self):
        edges = SymmetricClosedSampler(SamplerConfig(8, d=2, seed=1)).batch(100)
        assert np.all(geo.batch_total_curvature(edges) >= 2 * math.pi - 5e-8)


class TestTorsion:
    def test_planar_and_triangle_zero(self, rng):
        assert geo.total_torsion(square()) == 0.0
        a, b = rng.standard_normal((2, 3))
        assert geo.total_torsion(geo.ClosedPolygon([a, b, -a - b])) == pytest.approx(0.0, abs=1e-7)

    def test_known_value(self):
        # skew quadrilateral: each vertex has dihedral angle pi/2 with these binormals
        e = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 1], [0, -1, -1]], float)
        manual = 0.0
        for i in range(4):
            b1 = np.cross(e[i], e[(i + 1) % 4])
            b2 = np.cross(e[(i + 1) % 4], e[(i + 2) % 4])
            manual += geo.turning_angle(b1, b2)
        assert geo.total_torsion(geo.ClosedPolygon(e)) == pytest.approx(manual, abs=1e-13)

    def test_parallel_edges_contribute_zero(self):
        e = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0], [-2, 0, 0], [0, -1, 0]], float)
        assert np.isfinite(geo.total_torsion(geo.ClosedPolygon(e)))

    def test_planar_polygon_is_unsupported(self):
        with pytest.raises(UnsupportedDimensionError):
            geo.total_torsion(geo.ClosedPolygon([[1, 0], [0, 1], [-1, -1]]))


class TestChordsAndGyradius:
    def test_square(self):
        p = square()
        assert geo.chord_squared_mean(p, 2) == pytest.approx(2.0)
        assert geo.chord_squared_mean(p, 4) == pytest.approx(0.0, abs=1e-30)
        assert geo.chord_squared_mean(p, 1) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            geo.chord_squared_mean(p, 0)

    def test_closed_symmetry(self):
        edges = SymmetricClosedSampler(SamplerConfig(11, seed=8)).batch(50)
        for k in range(1, 11):
            np.testing.assert_allclose(
                geo.batch_chord_squared_mean(edges, k), geo.batch_chord_squared_mean(edges, 11 - k), rtol=1e-12
            )

    def test_arm_windows(self):
        e = np.array([[1.0, 0, 0], [0, 2, 0], [0, 0, 3]])
        arm = geo.PolygonArm(e)
        assert geo.chord_squared_mean(arm, 1) == pytest.approx((1 + 4 + 9) / 3)
        assert geo.chord_squared_mean(arm, 2) == pytest.approx((5 + 13) / 2)
        assert geo.chord_squared_mean(arm, 3) == pytest.approx(14)

    def test_gyradius_degenerate_and_translation(self):
        assert geo.gyradius_squared(geo.PolygonArm([[0.0, 0, 0]] * 3)) == 0.0
        p = geo.ClosedPolygon(SymmetricClosedSampler(SamplerConfig(10, seed=3)).batch(1)[0])
        v = p.vertices()
        shifted = v + np.array([3.0, -2.0, 7.5])
        direct = np.mean(np.sum((shifted - shifted.mean(axis=0)) ** 2, axis=1))
        assert geo.gyradius_squared(p) == pytest.approx(direct, rel=1e-12)

    def test_gyradius_conventions(self):
        # arm: n + 1 vertices; closed: n distinct vertices
        arm = geo.PolygonArm([[1.0, 0, 0], [1.0, 0, 0]])
        assert geo.gyradius_squared(arm) == pytest.approx(2 / 3)
        assert geo.gyradius_squared(square()) == pytest.approx(0.5)


class TestMisc:
    def test_defect_and_length(self):
        e = np.array([[1.0, 2, 3]])
        np.testing.assert_array_equal(geo.closure_defect(geo.PolygonArm(e)), e[0])
        np.testing.assert_array_equal(geo.closure_defect(geo.PolygonArm([e[0], -e[0]])), 0)
        tri = geo.ClosedPolygon([[1, 0, 0], [-0.5, math.sqrt(3) / 2, 0], [-0.5, -math.sqrt(3) / 2, 0]])
        assert geo.total_length(tri) == pytest.approx(3.0)

    @pytest.mark.parametrize("d", [2, 3])
    def test_csv_round_trip(self, d):
        edges = SymmetricClosedSampler(SamplerConfig(5, d=d, seed=1)).batch(3)
        buf = io.StringIO()
        assert geo.write_polygons_csv(edges, buf) == 3
        text = buf.getvalue()
        assert text.splitlines()[0] == ",".join(["poly_id", "edge_index", "x", "y", "z"][: 2 + d])
        back = geo.read_polygons_csv(text)
        assert [pid for pid, _ in back] == [0, 1, 2]
        for (_, e), orig in zip(back, edges):
            np.testing.assert_array_equal(e, orig)

    def test_csv_rejects_mixed_dimensions(self):
        with pytest.raises(UnsupportedDimensionError):
            geo.write_polygons_csv([np.ones((3, 2)), np.ones((3, 3))], io.StringIO())
