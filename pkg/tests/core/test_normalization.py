"""
Tests for the L2 normalization layer.
"""
import numpy as np
import pytest

from config.settings import config
from hypersphere.gradcheck import central_difference
from hypersphere.normalization import normalize_backward, normalize_forward, vector_norm


class TestNormalizeForward:
    """Forward map onto the unit sphere."""

    def test_three_four_five(self):
        ctx = normalize_forward(np.array([3.0, 4.0]))
        assert np.allclose(ctx.output, [0.6, 0.8], atol=1e-12)
        assert vector_norm(ctx) == pytest.approx(5.0)

    def test_unit_vector_unchanged(self, rng):
        u = rng.standard_normal(7)
        u /= np.linalg.norm(u)
        assert np.allclose(normalize_forward(u).output, u, atol=1e-9)

    def test_zero_vector(self):
        ctx = normalize_forward(np.zeros(3))
        assert np.array_equal(ctx.output, np.zeros(3))
        assert vector_norm(ctx) == pytest.approx(np.sqrt(config.NORM_EPSILON))

    def test_scale_equivariance(self, rng):
        for _ in range(100):
            x = rng.standard_normal(6)
            c = rng.uniform(0.01, 100.0)
            assert np.allclose(normalize_forward(c * x).output, normalize_forward(x).output, atol=1e-9)

    def test_unit_output_norm(self, rng):
        batch = rng.standard_normal((20, 5)) * 10.0
        norms = np.linalg.norm(normalize_forward(batch, axis=1).output, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-9)

    def test_columns(self, rng):
        w = rng.standard_normal((4, 6))
        assert np.allclose(np.linalg.norm(normalize_forward(w, axis=0).output, axis=0), 1.0, atol=1e-9)

    def test_distance_identity(self, rng):
        for _ in range(100):
            x = normalize_forward(rng.standard_normal(5)).output
            y = normalize_forward(rng.standard_normal(5)).output
            assert abs(np.sum((x - y) ** 2) - (2.0 - 2.0 * np.dot(x, y))) <= 1e-9


class TestNormalizeBackward:
    """Backward rule and its tangent-space geometry."""

    def test_radial_gradient_is_annihilated(self, rng):
        u = rng.standard_normal(5)
        u /= np.linalg.norm(u)
        assert np.allclose(normalize_backward(normalize_forward(u), u), 0.0, atol=1e-12)

    def test_hand_example(self):
        grad = normalize_backward(normalize_forward(np.array([3.0, 4.0])), np.array([1.0, 0.0]))
        assert np.allclose(grad, [0.128, -0.096], atol=1e-9)

    def test_hand_example_matches_finite_differences(self):
        x, g = np.array([3.0, 4.0]), np.array([1.0, 0.0])
        numeric = central_difference(lambda v: float(np.dot(g, normalize_forward(v).output)), x, 1e-6)
        assert np.allclose(normalize_backward(normalize_forward(x), g), numeric, atol=1e-8)

    def test_matches_finite_differences(self, rng):
        for _ in range(50):
            x, g = rng.standard_normal(6) * rng.uniform(0.5, 5.0), rng.standard_normal(6)
            analytic = normalize_backward(normalize_forward(x), g)
            numeric = central_difference(lambda v: float(np.dot(g, normalize_forward(v).output)), x, 1e-6)
            assert np.linalg.norm(analytic - numeric) <= 1e-6 * np.linalg.norm(analytic)

    def test_orthogonal_to_input(self, rng):
        for _ in range(1000):
            direction = rng.standard_normal(8)
            x = direction / np.linalg.norm(direction) * rng.uniform(0.1, 100.0)
            g = rng.standard_normal(8)
            projected = normalize_backward(normalize_forward(x), g)
            assert abs(np.dot(x, projected)) <= 1e-9 * np.linalg.norm(x) * np.linalg.norm(g)

    def test_descent_step_never_shrinks_norm(self, rng):
        for _ in range(1000):
            x = rng.standard_normal(8) * rng.uniform(0.1, 10.0)
            projected = normalize_backward(normalize_forward(x), rng.standard_normal(8))
            for alpha in (1e-3, 0.1, 1.0, 10.0):
                assert np.linalg.norm(x + alpha * projected) >= np.linalg.norm(x) * (1.0 - 1e-12)

    def test_batch_rows_match_single_vectors(self, rng):
        x, g = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        batch = normalize_backward(normalize_forward(x, axis=1), g)
        for row in range(4):
            assert np.allclose(batch[row], normalize_backward(normalize_forward(x[row]), g[row]), atol=1e-14)
