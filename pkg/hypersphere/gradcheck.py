"""
Central finite-difference verification of every analytic gradient.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from config.settings import config
from hypersphere.linalg import make_rng
from hypersphere.losses import (
    AgentMatrix, ComboTerm, LossConfig, LossKind, compute_loss, hinge_arguments, random_instance,
)
from hypersphere.normalization import normalize_backward, normalize_forward
from utils.logger import logger

# Below this gradient norm the comparison switches from relative to absolute.
GRADIENT_NORM_FLOOR = 1e-6


@dataclass
class GradCheckResult:
    name: str
    trials: int
    worst_error: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def central_difference(fn: Callable[[np.ndarray], float], x: np.ndarray, step: float) -> np.ndarray:
    """Numeric gradient of a scalar function of an array."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_grad = grad.reshape(-1)
    for index in range(flat_x.size):
        original = flat_x[index]
        flat_x[index] = original + step
        upper = fn(x)
        flat_x[index] = original - step
        lower = fn(x)
        flat_x[index] = original
        flat_grad[index] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.atleast_1d(np.asarray(analytic, dtype=np.float64))
    numeric = np.atleast_1d(np.asarray(numeric, dtype=np.float64))
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), GRADIENT_NORM_FLOOR)
    return float(np.linalg.norm(analytic - numeric) / scale)


LOSS_CHECKS: Dict[str, LossConfig] = {
    "baseline_softmax": LossConfig(kind=LossKind.BASELINE_SOFTMAX),
    "baseline_softmax_bias": LossConfig(kind=LossKind.BASELINE_SOFTMAX, use_bias=True),
    "scaled_cosine_softmax": LossConfig(kind=LossKind.SCALED_COSINE_SOFTMAX, scale=5.0),
    "scaled_cosine_softmax_learned": LossConfig(kind=LossKind.SCALED_COSINE_SOFTMAX, scale=5.0, learn_scale=True),
    "c_contrastive": LossConfig(kind=LossKind.C_CONTRASTIVE),
    "c_triplet": LossConfig(kind=LossKind.C_TRIPLET),
    "c_triplet_center": LossConfig(kind=LossKind.C_TRIPLET_CENTER),
    "combination": LossConfig(kind=LossKind.COMBINATION, scale=5.0, learn_scale=True, combo_weight=0.5),
    "combination_center": LossConfig(kind=LossKind.COMBINATION, scale=5.0, combo_weight=0.5,
                                     combo_with=ComboTerm.CENTER),
}

ALL_CHECKS = list(LOSS_CHECKS) + ["normalize"]


def _off_kink_instance(cfg: LossConfig, seed: int, n_samples: int, dim: int, n_classes: int):
    """Draw instances until every hinge argument is at least KINK_EXCLUSION away from zero."""
    attempt = 0
    while True:
        features, agents, labels = random_instance(n_samples, dim, n_classes, seed * 1000 + attempt)
        arguments = hinge_arguments(features, agents, labels, cfg)
        if arguments.size == 0 or np.min(np.abs(arguments)) > config.KINK_EXCLUSION:
            return features, agents, labels
        attempt += 1


def check_loss(name: str, trials: int = 100, seed: int = 0, step: Optional[float] = None,
               rtol: Optional[float] = None, n_samples: int = 6, dim: int = 4, n_classes: int = 5) -> GradCheckResult:
    """Compare analytic loss gradients (features, weights, bias, s) with central differences."""
    cfg = LOSS_CHECKS[name]
    step = config.FD_STEP if step is None else step
    rtol = config.GRAD_RTOL if rtol is None else rtol
    rng = make_rng(seed)
    worst, failures = 0.0, 0

    for trial in range(trials):
        features, agents, labels = _off_kink_instance(cfg, seed + trial, n_samples, dim, n_classes)
        bias = rng.standard_normal(n_classes) if cfg.use_bias else None
        scale = cfg.scale
        output = compute_loss(features, agents, labels, cfg, scale=scale, bias=bias)

        errors = [
            relative_error(output.grad_features, central_difference(
                lambda f: compute_loss(f, agents, labels, cfg, scale=scale, bias=bias).value, features, step)),
            relative_error(output.grad_weights, central_difference(
                lambda w: compute_loss(features, AgentMatrix(w), labels, cfg, scale=scale, bias=bias).value,
                agents.w, step)),
        ]
        if bias is not None:
            errors.append(relative_error(output.grad_bias, central_difference(
                lambda b: compute_loss(features, agents, labels, cfg, scale=scale, bias=b).value, bias, step)))
        if cfg.learn_scale:
            errors.append(relative_error(output.grad_scale, central_difference(
                lambda s: compute_loss(features, agents, labels, cfg, scale=float(s[0]), bias=bias).value,
                np.array([scale]), step)))

        trial_error = max(errors)
        worst = max(worst, trial_error)
        if trial_error > rtol:
            failures += 1
            logger.debug(f"{name} trial {trial}: relative error {trial_error:.3e}")

    result = GradCheckResult(name=name, trials=trials, worst_error=worst, failures=failures)
    logger.log_check(f"gradient {name}", result.passed, f"worst relative error {worst:.3e} over {trials} trials")
    return result


def check_normalize(trials: int = 100, seed: int = 0, step: Optional[float] = None,
                    rtol: Optional[float] = None, dim: int = 6) -> GradCheckResult:
    """Compare normalize_backward with the numeric gradient of <g, normalize(x)>."""
    step = config.FD_STEP if step is None else step
    rtol = config.GRAD_RTOL if rtol is None else rtol
    rng = make_rng(seed)
    worst, failures = 0.0, 0

    for trial in range(trials):
        direction = rng.standard_normal(dim)
        x = direction / np.linalg.norm(direction) * rng.uniform(0.1, 100.0)
        g = rng.standard_normal(dim)
        analytic = normalize_backward(normalize_forward(x), g)
        numeric = central_difference(lambda v: float(np.dot(g, normalize_forward(v).output)), x, step * np.linalg.norm(x))
        error = relative_error(analytic, numeric)
        worst = max(worst, error)
        if error > rtol:
            failures += 1

    result = GradCheckResult(name="normalize", trials=trials, worst_error=worst, failures=failures)
    logger.log_check("gradient normalize", result.passed, f"worst relative error {worst:.3e} over {trials} trials")
    return result


def run_gradient_suite(names: Optional[List[str]] = None, trials: int = 100, seed: int = 0) -> List[GradCheckResult]:
    names = ALL_CHECKS if names is None else names
    results = []
    for name in names:
        if name == "normalize":
            results.append(check_normalize(trials=trials, seed=seed))
        elif name in LOSS_CHECKS:
            results.append(check_loss(name, trials=trials, seed=seed))
        else:
            raise ValueError(f"unknown gradient check '{name}'; choose from {', '.join(ALL_CHECKS)}")
    return results
