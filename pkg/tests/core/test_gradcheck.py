"""
Finite-difference verification of every analytic gradient.
"""
import numpy as np
import pytest

from hypersphere.gradcheck import (
    ALL_CHECKS,
    LOSS_CHECKS,
    central_difference,
    check_loss,
    relative_error,
    run_gradient_suite,
)
from utils.logger import logger


class TestHelpers:
    """Numeric differentiation helpers."""

    def test_central_difference_of_quadratic(self):
        x = np.array([1.0, -2.0, 0.5])
        numeric = central_difference(lambda v: float(np.sum(v ** 2)), x, 1e-6)
        assert np.allclose(numeric, 2.0 * x, atol=1e-8)

    def test_relative_error_floor(self):
        assert relative_error(np.zeros(3), np.full(3, 1e-9)) < 1e-2

    def test_unknown_check(self):
        with pytest.raises(ValueError):
            run_gradient_suite(["no_such_loss"], trials=1)


@pytest.mark.acceptance
class TestGradientSuite:
    """Every loss and the normalization layer against central differences."""

    @pytest.mark.parametrize("name", list(LOSS_CHECKS))
    def test_loss_gradients(self, name):
        result = check_loss(name, trials=100, seed=0)
        logger.info(f"{name}: worst relative error {result.worst_error:.3e}")
        assert result.passed, f"{result.failures} of {result.trials} trials exceeded the tolerance"

    @pytest.mark.timeout(30)
    def test_full_suite(self):
        results = run_gradient_suite(trials=100, seed=1)
        assert [result.name for result in results] == ALL_CHECKS
        failed = [result.name for result in results if not result.passed]
        assert not failed, f"gradient mismatch in {failed}"
