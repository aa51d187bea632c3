"""
Numeric checks of the loss geometry: the no-bias scaling property of softmax,
the softmax loss lower bound after normalization, the agent distortion bound,
and the on-line distortion tracker.
"""
from dataclasses import dataclass, replace
from typing import Iterable, List, Sequence

import numpy as np
from scipy.special import softmax

from config.settings import config
from hypersphere.exceptions import DimensionError
from hypersphere.linalg import Matrix, as_matrix, jacobi_eigh, make_rng
from hypersphere.losses import AgentMatrix, euclidean_form_equivalence, random_instance, scaled_cosine_softmax
from hypersphere.normalization import normalize_backward, normalize_forward
from utils.logger import logger

BOUND_CURVE_CLASS_COUNTS = (10, 1000, 10575, 100000)
BOUND_CURVE_ELL_SQ = tuple(0.5 * step for step in range(1, 61))


# ===========================================
# SCALING PROPERTY (no-bias softmax)
# ===========================================

def scaling_raises_winner(w: Matrix, f: np.ndarray, s: float) -> bool:
    """True iff P_i(s f) >= P_i(f) for i = argmax_j W_j^T f (no bias)."""
    if s <= 1:
        raise ValueError(f"scale must be > 1, got {s}")
    w = as_matrix(w, "weight matrix")
    logits = w.T @ np.asarray(f, dtype=np.float64)
    winner = int(np.argmax(logits))
    return bool(softmax(s * logits)[winner] >= softmax(logits)[winner] - 1e-12)


def extreme_case_probability(n: int, s: float = 1.0) -> float:
    """Correct-class probability with cos = 1 for the correct class and -1 for the others."""
    logits = np.full(n, -s)
    logits[0] = s
    return float(softmax(logits)[0])


# ===========================================
# LOSS LOWER BOUND AFTER NORMALIZATION
# ===========================================

@dataclass(frozen=True)
class LossBound:
    n: int
    ell_sq: float
    bound: float


def loss_lower_bound(n: int, ell_sq: float) -> float:
    """log(1 + (n-1) exp(-(n/(n-1)) ell^2))."""
    if n < 2:
        raise ValueError(f"need at least 2 classes, got {n}")
    if ell_sq <= 0:
        raise ValueError(f"ell_sq must be > 0, got {ell_sq}")
    return float(np.log1p((n - 1) * np.exp(-(n / (n - 1)) * ell_sq)))


def bound_curve(ns: Iterable[int] = BOUND_CURVE_CLASS_COUNTS,
                ell_sqs: Iterable[float] = BOUND_CURVE_ELL_SQ) -> List[LossBound]:
    ell_sqs = list(ell_sqs)
    return [LossBound(n=n, ell_sq=ell_sq, bound=loss_lower_bound(n, ell_sq)) for n in ns for ell_sq in ell_sqs]


def simplex_agents(dim: int, n: int) -> AgentMatrix:
    """n unit vectors in R^dim with pairwise cosine -1/(n-1); requires n <= dim + 1."""
    if n < 2 or n > dim + 1:
        raise DimensionError(f"a regular simplex of {n} vertices does not fit in {dim} dimensions")
    gram = (n / (n - 1)) * np.eye(n) - np.ones((n, n)) / (n - 1)
    eigenvalues, vectors = jacobi_eigh(gram)
    points = vectors[:, :n - 1] * np.sqrt(np.clip(eigenvalues[:n - 1], 0.0, None))
    w = np.zeros((dim, n))
    w[:n - 1, :] = points.T
    return AgentMatrix(w / np.linalg.norm(w, axis=0, keepdims=True), normalized_columns=True)


@dataclass(frozen=True)
class GapResult:
    dim: int
    n: int
    ell_sq: float
    achieved: float
    bound: float
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return self.achieved - self.bound


def _tied_loss(w: Matrix, ell_sq: float, labels: np.ndarray):
    """Loss and gradient when every feature equals its own class agent."""
    output = scaled_cosine_softmax(w.T, w, ell_sq, labels)
    return output.value, output.grad_features.T + output.grad_weights


def empirical_bound_gap(dim: int, n: int, ell_sq: float, iterations: int = 5000, lr: float = 0.5,
                        tol: float = 1e-8, seed: int = 0) -> GapResult:
    """Achieved loss of a well-separated configuration minus the bound.

    The explicit simplex is used when it fits (n <= dim + 1); otherwise the
    agents are placed by projected gradient descent on the sphere.
    """
    bound = loss_lower_bound(n, ell_sq)
    labels = np.arange(n)
    if n <= dim + 1:
        achieved, _ = _tied_loss(simplex_agents(dim, n).w, ell_sq, labels)
        return GapResult(dim, n, ell_sq, achieved, bound, iterations=0, converged=True)

    w = AgentMatrix.random(dim, n, make_rng(seed), normalized=True).w
    converged = False
    step = 0
    for step in range(1, iterations + 1):
        _, grad = _tied_loss(w, ell_sq, labels)
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        w = w - lr * grad
        w = w / np.linalg.norm(w, axis=0, keepdims=True)
    achieved, _ = _tied_loss(w, ell_sq, labels)
    if not converged:
        logger.warning(f"bound gap search (d={dim}, n={n}) did not converge in {iterations} steps; "
                       f"final gap {achieved - bound:.3e}")
    return GapResult(dim, n, ell_sq, achieved, bound, iterations=step, converged=converged)


# ===========================================
# AGENT DISTORTION
# ===========================================

@dataclass(frozen=True)
class DistortionResult:
    distortion: float
    bound: float


def agent_distortion(f0: np.ndarray, cluster: Matrix, agent: np.ndarray) -> DistortionResult:
    """Mean (d(f0, f_j) - d(f0, W))^2 over the cluster and its bound mean d(f_j, W)^2.

    d is the Euclidean distance between L2-normalized vectors.
    """
    f0 = normalize_forward(f0).output
    cluster = normalize_forward(as_matrix(cluster, "cluster"), axis=1).output
    agent = normalize_forward(agent).output
    to_samples = np.linalg.norm(cluster - f0, axis=1)
    to_agent = np.linalg.norm(f0 - agent)
    distortion = float(np.mean((to_samples - to_agent) ** 2))
    bound = float(np.mean(np.sum((cluster - agent) ** 2, axis=1)))
    return DistortionResult(distortion=distortion, bound=bound)


def agent_distortion_bound(features: Matrix, agents: AgentMatrix, labels) -> float:
    """Mean squared normalized distance from each feature to its own agent."""
    f_hat = normalize_forward(as_matrix(features, "features"), axis=1).output
    w_hat = normalize_forward(agents.w, axis=0).output
    own = w_hat[:, np.asarray(labels)].T
    return float(np.mean(np.sum((f_hat - own) ** 2, axis=1)))


@dataclass(frozen=True)
class DistortionTracker:
    """Exponential moving average of the distortion bound."""
    ema: float = 0.0
    decay: float = config.TRACKER_DECAY

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")
        if self.ema < 0:
            raise ValueError(f"ema must be >= 0, got {self.ema}")


def tracker_update(tracker: DistortionTracker, value: float) -> DistortionTracker:
    if value < 0:
        raise ValueError(f"distortion values are non-negative, got {value}")
    return replace(tracker, ema=tracker.decay * tracker.ema + (1.0 - tracker.decay) * value)


# ===========================================
# CHECK SUITE
# ===========================================

@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str


def _outcome(name: str, passed: bool, detail: str) -> CheckOutcome:
    logger.log_check(name, passed, detail)
    return CheckOutcome(name, bool(passed), detail)


def check_scaling_property(trials: int = 10000, seed: int = 0,
                           scales: Sequence[float] = (1.01, 2.0, 10.0, 100.0)) -> CheckOutcome:
    rng = make_rng(seed)
    failures = 0
    for trial in range(trials):
        dim, n = int(rng.integers(2, 11)), int(rng.integers(2, 21))
        w = rng.standard_normal((dim, n))
        f = rng.standard_normal(dim)
        if not scaling_raises_winner(w, f, scales[trial % len(scales)]):
            failures += 1
    return _outcome("no-bias scaling property", failures == 0, f"{failures} failures in {trials} instances")


def check_bound_value() -> CheckOutcome:
    value = loss_lower_bound(10575, 1.0)
    return _outcome("loss bound n=10575, l^2=1", abs(value - 8.27) <= 0.01, f"bound {value:.4f}")


def check_bound_tightness(seed: int = 0) -> CheckOutcome:
    details, passed = [], True
    for dim, n, tight in ((2, 3, True), (3, 4, True), (2, 10, False), (3, 8, False)):
        result = empirical_bound_gap(dim, n, 1.0, seed=seed)
        ok = result.gap >= -1e-9 and (result.gap <= 1e-6 if tight else True)
        passed = passed and ok
        details.append(f"d={dim},n={n}: gap {result.gap:.2e}")
    return _outcome("loss bound tightness", passed, "; ".join(details))


def check_bound_monotone() -> CheckOutcome:
    ok = True
    for n in BOUND_CURVE_CLASS_COUNTS:
        values = [loss_lower_bound(n, ell_sq) for ell_sq in BOUND_CURVE_ELL_SQ]
        ok = ok and all(a > b for a, b in zip(values, values[1:]))
    for ell_sq in (0.5, 1.0, 5.0):
        values = [loss_lower_bound(n, ell_sq) for n in BOUND_CURVE_CLASS_COUNTS]
        ok = ok and all(a < b for a, b in zip(values, values[1:]))
    return _outcome("loss bound monotonicity", ok, "decreasing in l^2, increasing in n")


def check_distortion_bound(trials: int = 1000, seed: int = 0, cluster_size: int = 20, dim: int = 8) -> CheckOutcome:
    rng = make_rng(seed)
    violations = 0
    for _ in range(trials):
        result = agent_distortion(rng.standard_normal(dim), rng.standard_normal((cluster_size, dim)),
                                  rng.standard_normal(dim))
        if result.distortion > result.bound + 1e-12:
            violations += 1
    return _outcome("agent distortion bound", violations == 0, f"{violations} violations in {trials} trials")


def check_extreme_probabilities() -> CheckOutcome:
    p10, p1000 = extreme_case_probability(10), extreme_case_probability(1000)
    ok = abs(p10 - 0.45) <= 0.005 and abs(p1000 - 0.007) <= 0.0005
    return _outcome("extreme-case probabilities", ok, f"n=10: {p10:.4f}, n=1000: {p1000:.5f}")


def check_tangent_gradients(trials: int = 1000, seed: int = 0, dim: int = 8,
                            steps: Sequence[float] = (1e-3, 0.1, 1.0, 10.0)) -> CheckOutcome:
    """Backward output is orthogonal to x, and any descent step along it does not shrink ||x||."""
    rng = make_rng(seed)
    failures = 0
    for _ in range(trials):
        direction = rng.standard_normal(dim)
        x = direction / np.linalg.norm(direction) * rng.uniform(0.1, 100.0)
        g = rng.standard_normal(dim)
        projected = normalize_backward(normalize_forward(x), g)
        norm_x = np.linalg.norm(x)
        if abs(np.dot(x, projected)) > 1e-9 * norm_x * np.linalg.norm(g):
            failures += 1
            continue
        if any(np.linalg.norm(x + alpha * projected) < norm_x * (1.0 - 1e-12) for alpha in steps):
            failures += 1
    return _outcome("tangent gradients and norm growth", failures == 0, f"{failures} failures in {trials} trials")


def check_euclidean_equivalence(trials: int = 1000, seed: int = 0) -> CheckOutcome:
    worst = 0.0
    for trial in range(trials):
        features, agents, labels = random_instance(6, 5, 4, seed * 100000 + trial)
        scale = 1.0 + (trial % 30)
        cosine_form = scaled_cosine_softmax(features, agents, scale, labels).value
        distance_form = euclidean_form_equivalence(features, agents, scale, labels)
        worst = max(worst, abs(cosine_form - distance_form))
    return _outcome("cosine / squared-distance softmax equivalence", worst <= 1e-10, f"max difference {worst:.2e}")


def run_all_checks(trials: int = 1000, seed: int = 0) -> List[CheckOutcome]:
    """Every numeric check; the scaling property runs on ten times ``trials`` instances."""
    return [
        check_scaling_property(trials * 10, seed),
        check_bound_value(),
        check_bound_monotone(),
        check_bound_tightness(seed),
        check_distortion_bound(trials, seed),
        check_extreme_probabilities(),
        check_tangent_gradients(trials, seed),
        check_euclidean_equivalence(trials, seed),
    ]
