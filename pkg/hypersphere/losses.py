"""
Loss functions with forward values and exact feature / weight / scale gradients.

Every normalized loss normalizes its raw inputs internally (features along
rows, agent matrix along columns) and chains the gradients back through
``normalize_backward``, so callers always receive gradients with respect to
the un-normalized tensors they own.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp, softmax

from config.settings import config
from hypersphere.exceptions import DimensionError, LabelError
from hypersphere.linalg import Matrix, as_matrix, make_rng
from hypersphere.normalization import NormContext, normalize_backward, normalize_forward


class LossKind(str, Enum):
    BASELINE_SOFTMAX = "baseline_softmax"
    SCALED_COSINE_SOFTMAX = "scaled_cosine_softmax"
    C_CONTRASTIVE = "c_contrastive"
    C_TRIPLET = "c_triplet"
    C_TRIPLET_CENTER = "c_triplet_center"
    COMBINATION = "combination"


class ComboTerm(str, Enum):
    """Second term added to the scaled-cosine softmax in a combination."""
    C_CONTRASTIVE = "c_contrastive"
    CENTER = "center"


class NormalizationMode(str, Enum):
    """Which side of the cosine layer is normalized (ablation switch)."""
    BOTH = "both"
    FEATURE_ONLY = "feature"
    WEIGHT_ONLY = "weight"


METRIC_KINDS = (LossKind.C_CONTRASTIVE, LossKind.C_TRIPLET, LossKind.C_TRIPLET_CENTER)


@dataclass(frozen=True)
class LossConfig:
    """Loss selection and hyperparameters.

    ``scale`` is the fixed s, or the starting s when ``learn_scale`` is set;
    left unset it defaults to FIXED_SCALE or INITIAL_LEARNED_SCALE. ``margin``
    left unset takes the recommended value for the kind.
    """
    kind: LossKind = LossKind.SCALED_COSINE_SOFTMAX
    scale: Optional[float] = None
    learn_scale: bool = False
    margin: Optional[float] = None
    combo_weight: float = field(default_factory=lambda: config.COMBO_WEIGHT)
    combo_with: ComboTerm = ComboTerm.C_CONTRASTIVE
    use_bias: bool = False
    normalization: NormalizationMode = NormalizationMode.BOTH

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        object.__setattr__(self, "combo_with", ComboTerm(self.combo_with))
        object.__setattr__(self, "normalization", NormalizationMode(self.normalization))
        if self.scale is None:
            default = config.INITIAL_LEARNED_SCALE if self.learn_scale else config.FIXED_SCALE
            object.__setattr__(self, "scale", default)
        if self.margin is None:
            margin_kind = self.combo_with.value if self.kind is LossKind.COMBINATION else self.kind.value
            object.__setattr__(self, "margin", config.default_margin(margin_kind))

        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.combo_weight < 0:
            raise ValueError(f"combo_weight must be >= 0, got {self.combo_weight}")
        if self.use_bias and self.kind is not LossKind.BASELINE_SOFTMAX:
            raise ValueError("a bias term is only available for the baseline softmax")

    @property
    def uses_scale(self) -> bool:
        return self.kind in (LossKind.SCALED_COSINE_SOFTMAX, LossKind.COMBINATION)


@dataclass(frozen=True)
class AgentMatrix:
    """d x n weight matrix whose column j is the agent of class j."""
    w: Matrix
    normalized_columns: bool = False

    def __post_init__(self):
        object.__setattr__(self, "w", as_matrix(self.w, "agent matrix"))
        if self.normalized_columns:
            norms = np.linalg.norm(self.w, axis=0)
            if not np.all(np.isclose(norms, 1.0, rtol=0.0, atol=1e-9) | (norms == 0.0)):
                raise ValueError("agent columns flagged normalized but not unit norm")

    @classmethod
    def random(cls, dim: int, n_classes: int, rng: np.random.Generator, normalized: bool = False) -> "AgentMatrix":
        agents = cls(rng.standard_normal((dim, n_classes)) / np.sqrt(dim))
        return agents.normalized() if normalized else agents

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]

    def normalized(self) -> "AgentMatrix":
        """Unit-norm columns; an all-zero column stays zero."""
        norms = np.linalg.norm(self.w, axis=0, keepdims=True)
        return AgentMatrix(self.w / np.maximum(norms, config.NORM_EPSILON), normalized_columns=True)


@dataclass
class LossOutput:
    value: float
    grad_features: Matrix
    grad_weights: Matrix
    grad_scale: Optional[float] = None
    grad_bias: Optional[np.ndarray] = None

    def plus(self, other: "LossOutput", weight: float = 1.0) -> "LossOutput":
        """self + weight * other, gradients summed linearly."""
        def _add(a, b):
            if b is None:
                return a
            return weight * b if a is None else a + weight * b
        return LossOutput(
            value=self.value + weight * other.value,
            grad_features=self.grad_features + weight * other.grad_features,
            grad_weights=self.grad_weights + weight * other.grad_weights,
            grad_scale=_add(self.grad_scale, other.grad_scale),
            grad_bias=_add(self.grad_bias, other.grad_bias),
        )


AgentsLike = Union[AgentMatrix, Matrix]


def _weights(agents: AgentsLike) -> Matrix:
    return agents.w if isinstance(agents, AgentMatrix) else as_matrix(agents, "weight matrix")


def _prepare(features: Matrix, agents: AgentsLike, labels) -> Tuple[Matrix, Matrix, np.ndarray]:
    features = as_matrix(features, "features")
    w = _weights(agents)
    if features.shape[1] != w.shape[0]:
        raise DimensionError(f"features have dim {features.shape[1]} but agents have dim {w.shape[0]}")
    labels = np.asarray(labels)
    if labels.shape != (features.shape[0],):
        raise DimensionError(f"expected {features.shape[0]} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= w.shape[1]):
        raise LabelError(f"labels must lie in [0, {w.shape[1]}), got range [{labels.min()}, {labels.max()}]")
    return features, w, labels.astype(np.int64)


def _one_hot(labels: np.ndarray, n_classes: int) -> Matrix:
    encoded = np.zeros((labels.shape[0], n_classes))
    encoded[np.arange(labels.shape[0]), labels] = 1.0
    return encoded


def _normalize_inputs(features: Matrix, w: Matrix, mode: NormalizationMode = NormalizationMode.BOTH
                      ) -> Tuple[Optional[NormContext], Optional[NormContext], Matrix, Matrix]:
    f_ctx = normalize_forward(features, axis=1) if mode is not NormalizationMode.WEIGHT_ONLY else None
    w_ctx = normalize_forward(w, axis=0) if mode is not NormalizationMode.FEATURE_ONLY else None
    f_hat = f_ctx.output if f_ctx is not None else features
    w_hat = w_ctx.output if w_ctx is not None else w
    return f_ctx, w_ctx, f_hat, w_hat


def _chain(ctx: Optional[NormContext], grad: Matrix) -> Matrix:
    return grad if ctx is None else normalize_backward(ctx, grad)


def _softmax_terms(logits: Matrix, labels: np.ndarray) -> Tuple[float, Matrix]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    m = logits.shape[0]
    rows = np.arange(m)
    value = float(np.mean(logsumexp(logits, axis=1) - logits[rows, labels]))
    grad_logits = (softmax(logits, axis=1) - _one_hot(labels, logits.shape[1])) / m
    return value, grad_logits


def baseline_softmax(features: Matrix, w: AgentsLike, labels, bias: Optional[np.ndarray] = None) -> LossOutput:
    """Cross-entropy over raw inner products W_j^T f (+ b_j when a bias is given)."""
    features, w, labels = _prepare(features, w, labels)
    logits = features @ w
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (w.shape[1],):
            raise DimensionError(f"bias must have shape ({w.shape[1]},), got {bias.shape}")
        logits = logits + bias
    value, grad_logits = _softmax_terms(logits, labels)
    return LossOutput(
        value=value,
        grad_features=grad_logits @ w.T,
        grad_weights=features.T @ grad_logits,
        grad_bias=grad_logits.sum(axis=0) if bias is not None else None,
    )


def scaled_cosine_softmax(features: Matrix, agents: AgentsLike, scale: float, labels,
                          mode: NormalizationMode = NormalizationMode.BOTH) -> LossOutput:
    """Softmax over s * cos(f_i, W_j); ``grad_scale`` is dL/ds."""
    features, w, labels = _prepare(features, agents, labels)
    f_ctx, w_ctx, f_hat, w_hat = _normalize_inputs(features, w, NormalizationMode(mode))
    cosine = f_hat @ w_hat
    value, grad_logits = _softmax_terms(scale * cosine, labels)
    grad_cosine = scale * grad_logits
    return LossOutput(
        value=value,
        grad_features=_chain(f_ctx, grad_cosine @ w_hat.T),
        grad_weights=_chain(w_ctx, f_hat.T @ grad_cosine),
        grad_scale=float(np.sum(grad_logits * cosine)),
    )


def _squared_distances(f_hat: Matrix, w_hat: Matrix) -> Matrix:
    """||f_i - W_j||^2 for every sample/agent pair."""
    return np.sum(f_hat * f_hat, axis=1)[:, None] + np.sum(w_hat * w_hat, axis=0)[None, :] - 2.0 * (f_hat @ w_hat)


def euclidean_form_equivalence(features: Matrix, agents: AgentsLike, scale: float, labels) -> float:
    """Softmax over -(s/2) ||f_i - W_j||^2, evaluated from explicit differences."""
    features, w, labels = _prepare(features, agents, labels)
    f_hat = normalize_forward(features, axis=1).output
    w_hat = normalize_forward(w, axis=0).output
    differences = f_hat[:, :, None] - w_hat[None, :, :]
    logits = -0.5 * scale * np.sum(differences * differences, axis=1)
    rows = np.arange(features.shape[0])
    return float(np.mean(logsumexp(logits, axis=1) - logits[rows, labels]))


def _distance_loss(features: Matrix, agents: AgentsLike, labels, coefficients) -> LossOutput:
    """Shared plumbing for losses that are functions of the squared agent distances.

    ``coefficients(d2, labels)`` returns (value, dL/d d2).
    """
    features, w, labels = _prepare(features, agents, labels)
    f_ctx, w_ctx, f_hat, w_hat = _normalize_inputs(features, w)
    value, grad_d2 = coefficients(_squared_distances(f_hat, w_hat), labels)
    grad_f_hat = 2.0 * (grad_d2.sum(axis=1)[:, None] * f_hat - grad_d2 @ w_hat.T)
    grad_w_hat = 2.0 * (w_hat * grad_d2.sum(axis=0)[None, :] - f_hat.T @ grad_d2)
    return LossOutput(
        value=float(value),
        grad_features=_chain(f_ctx, grad_f_hat),
        grad_weights=_chain(w_ctx, grad_w_hat),
    )


def _negatives_mask(labels: np.ndarray, n_classes: int) -> np.ndarray:
    return _one_hot(labels, n_classes) == 0.0


def c_contrastive(features: Matrix, agents: AgentsLike, labels, margin: Optional[float] = None) -> LossOutput:
    """Pull to the own agent plus hinge push max(0, m - d^2) from every other agent, averaged over samples."""
    margin = config.CONTRASTIVE_MARGIN if margin is None else margin

    def coefficients(d2, labels):
        m, n = d2.shape
        rows = np.arange(m)
        hinge = margin - d2
        active = (hinge > 0) & _negatives_mask(labels, n)
        value = (np.sum(d2[rows, labels]) + np.sum(hinge[active])) / m
        grad = -active.astype(np.float64) / m
        grad[rows, labels] = 1.0 / m
        return value, grad

    return _distance_loss(features, agents, labels, coefficients)


def _triplet(features, agents, labels, margin: float, with_center: bool) -> LossOutput:
    def coefficients(d2, labels):
        m, n = d2.shape
        rows = np.arange(m)
        positive = d2[rows, labels]
        argument = margin + positive[:, None] - d2
        active = (argument > 0) & _negatives_mask(labels, n)
        value = np.sum(argument[active])
        grad = -active.astype(np.float64) / m
        grad[rows, labels] = active.sum(axis=1) / m
        if with_center:
            value += np.sum(positive)
            grad[rows, labels] += 1.0 / m
        return value / m, grad

    return _distance_loss(features, agents, labels, coefficients)


def c_triplet(features: Matrix, agents: AgentsLike, labels, margin: Optional[float] = None) -> LossOutput:
    """Hinge max(0, m + d^2(own) - d^2(k)) summed over every negative agent k, averaged over samples."""
    return _triplet(features, agents, labels, config.TRIPLET_MARGIN if margin is None else margin, False)


def c_triplet_center(features: Matrix, agents: AgentsLike, labels, margin: Optional[float] = None) -> LossOutput:
    """C-triplet plus the own-agent distance, optimized whether or not the hinge is active."""
    return _triplet(features, agents, labels, config.TRIPLET_MARGIN if margin is None else margin, True)


def center_penalty(features: Matrix, agents: AgentsLike, labels) -> LossOutput:
    """Mean squared normalized distance from each feature to its own agent."""
    def coefficients(d2, labels):
        m = d2.shape[0]
        rows = np.arange(m)
        grad = np.zeros_like(d2)
        grad[rows, labels] = 1.0 / m
        return np.mean(d2[rows, labels]), grad

    return _distance_loss(features, agents, labels, coefficients)


def combined_loss(features: Matrix, agents: AgentsLike, labels, cfg: LossConfig,
                  scale: Optional[float] = None) -> LossOutput:
    """Scaled-cosine softmax + combo_weight * (C-contrastive or center term)."""
    if cfg.kind is not LossKind.COMBINATION:
        raise ValueError(f"combined_loss needs a combination config, got {cfg.kind.value}")
    scale = cfg.scale if scale is None else scale
    total = scaled_cosine_softmax(features, agents, scale, labels, cfg.normalization)
    if cfg.combo_with is ComboTerm.C_CONTRASTIVE:
        second = c_contrastive(features, agents, labels, cfg.margin)
    else:
        second = center_penalty(features, agents, labels)
    return total.plus(second, cfg.combo_weight)


def compute_loss(features: Matrix, agents: AgentsLike, labels, cfg: LossConfig,
                 scale: Optional[float] = None, bias: Optional[np.ndarray] = None) -> LossOutput:
    """Evaluate the loss selected by ``cfg.kind``."""
    scale = cfg.scale if scale is None else scale
    kind = cfg.kind
    if kind is LossKind.BASELINE_SOFTMAX:
        return baseline_softmax(features, agents, labels, bias if cfg.use_bias else None)
    if kind is LossKind.SCALED_COSINE_SOFTMAX:
        return scaled_cosine_softmax(features, agents, scale, labels, cfg.normalization)
    if kind is LossKind.C_CONTRASTIVE:
        return c_contrastive(features, agents, labels, cfg.margin)
    if kind is LossKind.C_TRIPLET:
        return c_triplet(features, agents, labels, cfg.margin)
    if kind is LossKind.C_TRIPLET_CENTER:
        return c_triplet_center(features, agents, labels, cfg.margin)
    return combined_loss(features, agents, labels, cfg, scale)


def hinge_arguments(features: Matrix, agents: AgentsLike, labels, cfg: LossConfig) -> np.ndarray:
    """Arguments of every hinge the loss evaluates (empty for smooth losses)."""
    features, w, labels = _prepare(features, agents, labels)
    kind = cfg.kind
    contrastive = kind is LossKind.C_CONTRASTIVE or (
        kind is LossKind.COMBINATION and cfg.combo_with is ComboTerm.C_CONTRASTIVE)
    if not contrastive and kind not in (LossKind.C_TRIPLET, LossKind.C_TRIPLET_CENTER):
        return np.empty(0)
    _, _, f_hat, w_hat = _normalize_inputs(features, w)
    d2 = _squared_distances(f_hat, w_hat)
    negatives = _negatives_mask(labels, w.shape[1])
    if contrastive:
        return (cfg.margin - d2)[negatives]
    positive = d2[np.arange(d2.shape[0]), labels]
    return (cfg.margin + positive[:, None] - d2)[negatives]


def predict_classes(features: Matrix, agents: AgentsLike, cfg: LossConfig,
                    bias: Optional[np.ndarray] = None) -> np.ndarray:
    """Class decisions: argmax raw logits for the baseline, argmax cosine (nearest agent) otherwise."""
    features = as_matrix(features, "features")
    w = _weights(agents)
    if cfg.kind is LossKind.BASELINE_SOFTMAX:
        logits = features @ w
        if cfg.use_bias and bias is not None:
            logits = logits + bias
        return np.argmax(logits, axis=1)
    mode = cfg.normalization if cfg.kind in (LossKind.SCALED_COSINE_SOFTMAX, LossKind.COMBINATION) \
        else NormalizationMode.BOTH
    _, _, f_hat, w_hat = _normalize_inputs(features, w, mode)
    return np.argmax(f_hat @ w_hat, axis=1)


def random_instance(n_samples: int, dim: int, n_classes: int, seed: int) -> Tuple[Matrix, AgentMatrix, np.ndarray]:
    """Random raw features, raw agents, and labels covering every class when possible."""
    rng = make_rng(seed)
    features = rng.standard_normal((n_samples, dim)) * rng.uniform(0.5, 2.0, size=(n_samples, 1))
    agents = AgentMatrix(rng.standard_normal((dim, n_classes)) * rng.uniform(0.5, 2.0, size=(1, n_classes)))
    labels = np.arange(n_samples) % n_classes
    rng.shuffle(labels)
    return features, agents, labels
