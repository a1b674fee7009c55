"""
Tests for the Nil3(tau) ambient formulas: metric, frame, connection, curvature and graph normals.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from niljs.errors import InputError
from niljs.geometry.ambient import (AmbientParams, FrameVector, GraphJet, christoffel_connection,
                                    connection_table, frame_at, graph_normal, metric_eval, ricci,
                                    sectional_curvature, submersion, to_frame)

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)
taus = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)


def unit_vectors(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


class TestAmbientParams:

    def test_defaults_are_flat_and_minimal(self):
        params = AmbientParams()
        assert params.tau == 0.0 and params.h == 0.0

    def test_negative_h_rejected(self):
        with pytest.raises(InputError):
            AmbientParams(tau=0.0, h=-0.1)

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            AmbientParams(tau=float("nan"), h=0.1)


class TestMetricAndFrame:

    def test_vertical_unit_in_flat_space(self):
        assert metric_eval((3.0, -2.0, 1.0), (0, 0, 1), (0, 0, 1), AmbientParams(tau=0.0)) == pytest.approx(1.0)

    def test_horizontal_at_origin(self):
        assert metric_eval((0.0, 0.0, 0.0), (1, 0, 0), (1, 0, 0), AmbientParams(tau=1.0)) == pytest.approx(1.0)

    def test_horizontal_picks_up_vertical_part_off_axis(self):
        assert metric_eval((0.0, 1.0, 0.0), (1, 0, 0), (1, 0, 0), AmbientParams(tau=1.0)) == pytest.approx(2.0)

    def test_frame_at_origin(self):
        e1, e2, xi = frame_at((0.0, 0.0, 0.0), AmbientParams(tau=0.7))
        np.testing.assert_allclose(e1, [1, 0, 0])
        np.testing.assert_allclose(e2, [0, 1, 0])
        np.testing.assert_allclose(xi, [0, 0, 1])

    def test_frame_coordinates(self):
        e1, e2, _ = frame_at((1.0, 3.0, 0.0), AmbientParams(tau=2.0))
        np.testing.assert_allclose(e1, [1, 0, -6])
        np.testing.assert_allclose(e2, [0, 1, 2])

    @given(x=finite, y=finite, z=finite, tau=taus)
    @settings(max_examples=50, deadline=None)
    def test_frame_is_orthonormal(self, x, y, z, tau):
        params = AmbientParams(tau=tau)
        p = (x, y, z)
        frame = frame_at(p, params)
        gram = np.array([[metric_eval(p, a, b, params) for b in frame] for a in frame])
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-9)

    def test_to_frame_of_frame_vectors(self):
        params = AmbientParams(tau=1.3)
        p = (0.4, -0.8, 2.0)
        for k, e in enumerate(frame_at(p, params)):
            np.testing.assert_allclose(to_frame(p, e, params).as_array(), np.eye(3)[k], atol=1e-12)

    def test_submersion_drops_height(self):
        assert submersion((1.5, -2.0, 9.0)) == (1.5, -2.0)


class TestConnection:

    @pytest.mark.parametrize("tau", [-1.0, 0.5, 2.0])
    def test_table_matches_christoffel_symbols(self, tau):
        params = AmbientParams(tau=tau)
        table = connection_table(params)
        for p in [(0.0, 0.0, 0.0), (0.3, -1.2, 0.7), (2.0, 1.0, -3.0)]:
            np.testing.assert_allclose(christoffel_connection(p, params), table, atol=1e-10)

    def test_table_is_metric_compatible(self):
        # <nabla_X E_j, E_k> + <E_j, nabla_X E_k> = 0 in an orthonormal frame
        table = connection_table(AmbientParams(tau=0.9))
        np.testing.assert_allclose(table + table.transpose(0, 2, 1), 0.0, atol=1e-15)

    def test_flat_table_vanishes(self):
        assert not np.any(connection_table(AmbientParams(tau=0.0)))


class TestCurvature:

    def test_sectional_curvatures(self):
        tau = 0.8
        params = AmbientParams(tau=tau)
        assert sectional_curvature((1, 0, 0), (0, 1, 0), params) == pytest.approx(-3 * tau ** 2)
        assert sectional_curvature((1, 0, 0), (0, 0, 1), params) == pytest.approx(tau ** 2)
        assert sectional_curvature((0, 1, 0), (0, 0, 1), params) == pytest.approx(tau ** 2)

    def test_sectional_needs_independent_vectors(self):
        with pytest.raises(InputError):
            sectional_curvature((1, 0, 0), (2, 0, 0), AmbientParams(tau=1.0))

    def test_ricci_flat(self):
        for v in unit_vectors(0, 10):
            assert ricci(v, AmbientParams(tau=0.0)) == pytest.approx(0.0, abs=1e-15)

    def test_ricci_of_xi(self):
        assert ricci(FrameVector(0.0, 0.0, 1.0), AmbientParams(tau=1.0)) == pytest.approx(2.0)

    def test_ricci_of_horizontal(self):
        assert ricci((1.0, 0.0, 0.0), AmbientParams(tau=1.0)) == pytest.approx(-2.0)

    def test_ricci_bounds_on_random_vectors(self):
        tau = 0.7
        params = AmbientParams(tau=tau)
        values = np.array([ricci(v, params) for v in unit_vectors(1, 10000)])
        assert values.min() >= -2 * tau ** 2 - 1e-12
        assert values.max() <= 2 * tau ** 2 + 1e-12

    def test_ricci_is_quadratic_in_vertical_component(self):
        # Ric(v) = 2 tau^2 (2 c3^2 - 1) for unit v
        tau = 1.1
        params = AmbientParams(tau=tau)
        for v in unit_vectors(2, 20):
            assert ricci(v, params) == pytest.approx(2 * tau ** 2 * (2 * v[2] ** 2 - 1), abs=1e-12)

    def test_ricci_rejects_non_unit(self):
        with pytest.raises(InputError):
            ricci((1.0, 1.0, 0.0), AmbientParams(tau=1.0))


class TestGraphNormal:

    def test_horizontal_plane(self):
        n, w = graph_normal(GraphJet(x=0.3, y=-0.2), AmbientParams(tau=0.0))
        np.testing.assert_allclose(n.as_array(), [0, 0, 1])
        assert w == pytest.approx(1.0)

    def test_tilted_by_bundle_curvature(self):
        n, w = graph_normal(GraphJet(x=0.0, y=1.0), AmbientParams(tau=1.0))
        assert w == pytest.approx(np.sqrt(2.0))
        np.testing.assert_allclose(n.as_array(), [-1 / np.sqrt(2), 0, 1 / np.sqrt(2)], atol=1e-12)

    @given(x=finite, y=finite, ux=finite, uy=finite, tau=taus)
    @settings(max_examples=100, deadline=None)
    def test_unit_and_vertical_component(self, x, y, ux, uy, tau):
        n, w = graph_normal(GraphJet(x=x, y=y, ux=ux, uy=uy), AmbientParams(tau=tau))
        assert n.norm() == pytest.approx(1.0, abs=1e-12)
        assert w * n.c3 == pytest.approx(1.0, abs=1e-12)
