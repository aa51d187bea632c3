"""
Verification-protocol evaluation: pair scoring, k-fold threshold accuracy,
TPR at a target false-accept rate, and the video-pair score histogram with a
histogram-intersection-kernel SVM.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.model_selection import KFold

from config.settings import config
from hypersphere.exceptions import DimensionError, FormatError
from hypersphere.linalg import Matrix, as_matrix, make_rng, pca_apply, pca_fit
from utils.data_parser import data_parser
from utils.logger import logger

SCORE_SLACK = 1e-12


# ===========================================
# SCORING
# ===========================================

def mirror_merge(f_orig: np.ndarray, f_mirror: np.ndarray) -> np.ndarray:
    """Element-wise sum of the features of an image and its mirror."""
    f_orig = np.asarray(f_orig, dtype=np.float64)
    f_mirror = np.asarray(f_mirror, dtype=np.float64)
    if f_orig.shape != f_mirror.shape:
        raise DimensionError(f"cannot merge features of shape {f_orig.shape} and {f_mirror.shape}")
    return f_orig + f_mirror


class ScoreKind(str, Enum):
    COSINE = "cosine"
    INNER_PRODUCT = "inner_product"
    EUCLIDEAN = "euclidean"


def _unit_rows(x: Matrix) -> Matrix:
    """Rows scaled to unit length; rows shorter than eps are left near zero."""
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.maximum(norms, config.NORM_EPSILON)


def cosine_score(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"cannot score vectors of length {a.size} and {b.size}")
    return float(np.clip(np.dot(_unit_rows(a), _unit_rows(b)), -1.0, 1.0))


def _aligned(features_a: Matrix, features_b: Matrix) -> Tuple[Matrix, Matrix]:
    features_a = as_matrix(features_a, "features_a")
    features_b = as_matrix(features_b, "features_b")
    if features_a.shape != features_b.shape:
        raise DimensionError(f"pair features have shapes {features_a.shape} and {features_b.shape}")
    return features_a, features_b


def cosine_scores(features_a: Matrix, features_b: Matrix) -> np.ndarray:
    """Row-wise cosine of two aligned feature matrices."""
    features_a, features_b = _aligned(features_a, features_b)
    return np.clip(np.sum(_unit_rows(features_a) * _unit_rows(features_b), axis=1), -1.0, 1.0)


def pair_scores(features_a: Matrix, features_b: Matrix, kind: ScoreKind = ScoreKind.COSINE) -> np.ndarray:
    """Row-wise similarity; higher means more likely the same identity.

    ``inner_product`` scores the raw features and ``euclidean`` is the negated
    distance, both without normalization.
    """
    kind = ScoreKind(kind)
    if kind is ScoreKind.COSINE:
        return cosine_scores(features_a, features_b)
    features_a, features_b = _aligned(features_a, features_b)
    if kind is ScoreKind.INNER_PRODUCT:
        return np.sum(features_a * features_b, axis=1)
    return -np.linalg.norm(features_a - features_b, axis=1)


def cosine_score_matrix(frames_a: Matrix, frames_b: Matrix) -> Matrix:
    """|a| x |b| matrix of cosine scores between two frame sets."""
    frames_a = as_matrix(frames_a, "frames_a")
    frames_b = as_matrix(frames_b, "frames_b")
    if frames_a.shape[1] != frames_b.shape[1]:
        raise DimensionError(f"frame features have {frames_a.shape[1]} and {frames_b.shape[1]} dims")
    return np.clip(_unit_rows(frames_a) @ _unit_rows(frames_b).T, -1.0, 1.0)


# ===========================================
# PAIR SETS
# ===========================================

def assign_folds(n_pairs: int, k: int) -> np.ndarray:
    """Contiguous k-way fold index per pair."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n_pairs < k:
        raise ValueError(f"cannot split {n_pairs} pairs into {k} non-empty folds")
    folds = np.empty(n_pairs, dtype=np.int64)
    for fold, (_, test_index) in enumerate(KFold(n_splits=k, shuffle=False).split(np.arange(n_pairs))):
        folds[test_index] = fold
    return folds


@dataclass
class PairSet:
    """Aligned pair features with same-identity flags and a fold partition."""
    features_a: Matrix
    features_b: Matrix
    same: np.ndarray
    folds: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features_a = as_matrix(self.features_a, "features_a")
        self.features_b = as_matrix(self.features_b, "features_b")
        self.same = np.asarray(self.same, dtype=bool)
        if self.features_a.shape != self.features_b.shape or self.same.shape != (self.features_a.shape[0],):
            raise DimensionError("pair features and flags are not aligned")
        if self.folds is not None:
            self.folds = np.asarray(self.folds, dtype=np.int64)
            if self.folds.shape != self.same.shape:
                raise DimensionError("fold assignment does not cover every pair")
            labels = np.unique(self.folds)
            if not np.array_equal(labels, np.arange(labels.size)) or labels.size < 2:
                raise ValueError(f"fold labels must run 0..k-1 over non-empty folds with k >= 2, got {labels.tolist()}")

    def __len__(self) -> int:
        return self.same.size

    @property
    def k(self) -> int:
        return int(np.unique(self.folds).size) if self.folds is not None else 0

    def with_folds(self, k: int) -> "PairSet":
        return PairSet(self.features_a, self.features_b, self.same, assign_folds(len(self), k))

    def scores(self, kind: ScoreKind = ScoreKind.COSINE) -> np.ndarray:
        return pair_scores(self.features_a, self.features_b, kind)

    @classmethod
    def from_features(cls, features: Matrix, pairs: Sequence[Tuple[int, int, bool]], k: Optional[int] = None) -> "PairSet":
        """Pairs of row indices into ``features``."""
        features = as_matrix(features, "features")
        index = np.array([(a, b) for a, b, _ in pairs], dtype=np.int64).reshape(-1, 2)
        if index.size and (index.min() < 0 or index.max() >= features.shape[0]):
            raise FormatError("pair id", f"ids must lie in [0, {features.shape[0]})")
        same = np.array([flag for _, _, flag in pairs], dtype=bool)
        pair_set = cls(features[index[:, 0]], features[index[:, 1]], same)
        return pair_set.with_folds(k) if k else pair_set


def make_pair_set(features: Matrix, labels: np.ndarray, n_pairs: int, seed: int,
                  k: int = config.KFOLD_SPLITS) -> PairSet:
    """Random balanced same/different pairs drawn from labelled features."""
    rng = make_rng(seed)
    labels = np.asarray(labels)
    by_class = [np.flatnonzero(labels == label) for label in np.unique(labels)]
    eligible = [members for members in by_class if members.size >= 2]
    if not eligible or len(by_class) < 2:
        raise ValueError("need a class with two samples and at least two classes")
    pairs = []
    for index in range(n_pairs):
        if index % 2 == 0:
            members = eligible[rng.integers(len(eligible))]
            a, b = rng.choice(members, 2, replace=False)
            pairs.append((int(a), int(b), True))
        else:
            first, second = rng.choice(len(by_class), 2, replace=False)
            pairs.append((int(rng.choice(by_class[first])), int(rng.choice(by_class[second])), False))
    return PairSet.from_features(features, pairs, k)


def load_pair_set(pair_list: str, feature_store: str, k: int = config.KFOLD_SPLITS) -> PairSet:
    """Pair list (`id_a id_b label`) referencing rows of the first matrix in a feature blob."""
    pairs = data_parser.read_pair_list(pair_list)
    matrices = data_parser.read_matrices(feature_store)
    if not matrices or matrices[0].ndim != 2:
        raise FormatError("feature store", "expected a 2-D feature matrix first")
    logger.info(f"Loaded {len(pairs)} pairs over {matrices[0].shape[0]} stored features")
    return PairSet.from_features(matrices[0], pairs, k)


# ===========================================
# K-FOLD ACCURACY
# ===========================================

def _threshold_candidates(scores: np.ndarray) -> np.ndarray:
    """Below-all sentinel, midpoints of adjacent distinct scores, above-all sentinel."""
    distinct = np.unique(scores)
    if distinct.size == 0:
        return np.array([0.0])
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    return np.concatenate(([distinct[0] - 1.0], midpoints, [distinct[-1] + 1.0]))


def _accuracies(scores: np.ndarray, same: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Accuracy of "same iff score > t" for every t."""
    positives = np.sort(scores[same])
    negatives = np.sort(scores[~same])
    true_accepts = positives.size - np.searchsorted(positives, thresholds, side="right")
    true_rejects = np.searchsorted(negatives, thresholds, side="right")
    return (true_accepts + true_rejects) / max(scores.size, 1)


def pair_accuracy(scores: np.ndarray, same: np.ndarray, threshold: float) -> float:
    if scores.size == 0:
        return 0.0
    return float(np.mean((scores > threshold) == same))


def best_threshold(scores: np.ndarray, same: np.ndarray) -> Tuple[float, float]:
    """Accuracy-maximizing threshold; ties resolve to the lowest candidate."""
    scores = np.asarray(scores, dtype=np.float64)
    same = np.asarray(same, dtype=bool)
    candidates = _threshold_candidates(scores)
    accuracies = _accuracies(scores, same, candidates)
    best = int(np.argmax(accuracies))
    return float(candidates[best]), float(accuracies[best])


@dataclass(frozen=True)
class FoldResult:
    fold: int
    threshold: float
    accuracy: float


@dataclass(frozen=True)
class KFoldResult:
    mean: float
    stderr: float
    folds: List[FoldResult] = field(default_factory=list)


def _summarize(fold_results: List[FoldResult]) -> KFoldResult:
    accuracies = np.array([result.accuracy for result in fold_results])
    stderr = float(np.std(accuracies, ddof=1) / np.sqrt(accuracies.size)) if accuracies.size > 1 else 0.0
    return KFoldResult(mean=float(accuracies.mean()), stderr=stderr, folds=fold_results)


def kfold_accuracy_from_scores(scores: np.ndarray, same: np.ndarray, folds: np.ndarray) -> KFoldResult:
    """Per fold: threshold from the other folds, accuracy on the held-out one."""
    scores = np.asarray(scores, dtype=np.float64)
    same = np.asarray(same, dtype=bool)
    results = []
    for fold in np.unique(folds):
        held_out = folds == fold
        threshold, _ = best_threshold(scores[~held_out], same[~held_out])
        results.append(FoldResult(int(fold), threshold, pair_accuracy(scores[held_out], same[held_out], threshold)))
    return _summarize(results)


def kfold_accuracy(pairs: PairSet, k: int = config.KFOLD_SPLITS, pca: bool = False,
                   pca_keep: Optional[int] = None, kind: ScoreKind = ScoreKind.COSINE) -> KFoldResult:
    """Mean and standard error of held-out pair accuracy.

    With ``pca`` a projection is fitted on the training folds' features and
    applied to every pair before scoring; ``pca_keep`` defaults to the full
    feature dimension (rotation plus centering). ``kind`` picks the pair score.
    """
    if pairs.folds is None or pairs.k != k:
        pairs = pairs.with_folds(k)
    if not pca:
        result = kfold_accuracy_from_scores(pairs.scores(kind), pairs.same, pairs.folds)
    else:
        keep = pca_keep or pairs.features_a.shape[1]
        results = []
        for fold in range(pairs.k):
            held_out = pairs.folds == fold
            training = np.vstack([pairs.features_a[~held_out], pairs.features_b[~held_out]])
            model = pca_fit(training, keep)
            scores = pair_scores(pca_apply(model, pairs.features_a), pca_apply(model, pairs.features_b), kind)
            threshold, _ = best_threshold(scores[~held_out], pairs.same[~held_out])
            results.append(FoldResult(fold, threshold, pair_accuracy(scores[held_out], pairs.same[held_out], threshold)))
        result = _summarize(results)
    logger.info(f"{k}-fold {ScoreKind(kind).value} accuracy {result.mean:.4f} +/- {result.stderr:.4f}")
    return result


def snapshot_averaged_accuracy(pair_sets: Sequence[PairSet], k: int = config.KFOLD_SPLITS, pca: bool = False,
                               pca_keep: Optional[int] = None, kind: ScoreKind = ScoreKind.COSINE) -> float:
    """Evaluate each snapshot's pairs separately and average the accuracies."""
    if not pair_sets:
        raise ValueError("no pair sets to average")
    means = [kfold_accuracy(pair_set, k, pca, pca_keep, kind).mean for pair_set in pair_sets]
    logger.info(f"Snapshot-averaged accuracy over {len(means)} snapshots: {np.mean(means):.4f}")
    return float(np.mean(means))


# ===========================================
# TPR AT FAR
# ===========================================

@dataclass(frozen=True)
class FarResult:
    far: float
    threshold: float
    tpr: float
    achieved_far: float
    resolvable: bool
    min_far: float


def tpr_at_far(scores: np.ndarray, same: np.ndarray, far: float) -> FarResult:
    """TPR at the smallest score threshold whose false-accept rate is <= far."""
    if not 0.0 < far < 1.0:
        raise ValueError(f"far must lie in (0, 1), got {far}")
    scores = np.asarray(scores, dtype=np.float64)
    same = np.asarray(same, dtype=bool)
    positives, negatives = scores[same], np.sort(scores[~same])
    if positives.size == 0 or negatives.size == 0:
        raise ValueError("TPR@FAR needs both genuine and impostor pairs")

    candidates = np.unique(scores)
    false_accept_rates = (negatives.size - np.searchsorted(negatives, candidates, side="right")) / negatives.size
    index = int(np.argmax(false_accept_rates <= far))
    threshold = float(candidates[index])
    min_far = 1.0 / negatives.size
    resolvable = far >= min_far
    if not resolvable:
        logger.warning(f"FAR {far} is below the resolvable minimum {min_far:.3g} for {negatives.size} impostor pairs")
    return FarResult(
        far=far,
        threshold=threshold,
        tpr=float(np.mean(positives > threshold)),
        achieved_far=float(false_accept_rates[index]),
        resolvable=resolvable,
        min_far=min_far,
    )


# ===========================================
# VIDEO HISTOGRAMS
# ===========================================

@dataclass(frozen=True)
class ScoreHistogram:
    counts: np.ndarray
    low: float = -1.0
    high: float = 1.0

    @property
    def bins(self) -> int:
        return self.counts.size

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def centers(self) -> np.ndarray:
        edges = np.linspace(self.low, self.high, self.bins + 1)
        return (edges[:-1] + edges[1:]) / 2.0

    def normalized(self) -> np.ndarray:
        """L1-normalized bin masses."""
        return self.counts / self.total if self.total else self.counts.astype(np.float64)

    def mean_score(self) -> float:
        return float(np.dot(self.normalized(), self.centers))


def histogram_from_scores(scores: np.ndarray, bins: int = config.HISTOGRAM_BINS) -> ScoreHistogram:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise ValueError("cannot histogram an empty score matrix")
    counts, _ = np.histogram(np.clip(scores, -1.0, 1.0), bins=bins, range=(-1.0, 1.0))
    return ScoreHistogram(counts=counts)


def video_histogram(frames_a: Matrix, frames_b: Matrix, bins: int = config.HISTOGRAM_BINS) -> ScoreHistogram:
    """Histogram of all frame-to-frame cosine scores between two videos."""
    if np.asarray(frames_a).shape[0] == 0 or np.asarray(frames_b).shape[0] == 0:
        raise ValueError("each video needs at least one frame feature")
    return histogram_from_scores(cosine_score_matrix(frames_a, frames_b), bins)


def mean_score(scores: np.ndarray) -> float:
    """Average of the whole score matrix."""
    return float(np.mean(scores))


# ===========================================
# HIK-SVM
# ===========================================

def hik_kernel(h1: np.ndarray, h2: np.ndarray) -> float:
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    if h1.shape != h2.shape:
        raise DimensionError(f"histograms have {h1.size} and {h2.size} bins")
    return float(np.minimum(h1, h2).sum())


def hik_gram(rows: Matrix, columns: Optional[Matrix] = None) -> Matrix:
    rows = as_matrix(rows, "histograms")
    columns = rows if columns is None else as_matrix(columns, "histograms")
    if rows.shape[1] != columns.shape[1]:
        raise DimensionError("histograms have different bin counts")
    return np.array([np.minimum(row, columns).sum(axis=1) for row in rows]).reshape(rows.shape[0], columns.shape[0])


def _as_histogram_matrix(histograms) -> Matrix:
    """Stack ScoreHistograms (L1-normalized) or already-normalized rows."""
    rows = [h.normalized() if isinstance(h, ScoreHistogram) else np.asarray(h, dtype=np.float64) for h in histograms]
    return as_matrix(np.array(rows), "histograms")


@dataclass(frozen=True)
class HikSvmModel:
    support_vectors: Matrix
    dual_coef: np.ndarray
    bias: float
    C: float
    kkt_violation: float
    converged: bool
    iterations: int


def _select_working_pair(y: np.ndarray, alpha: np.ndarray, gradient: np.ndarray, C: float) -> Tuple[int, int, float]:
    """Maximal violating pair; returns (i, j, m - M)."""
    minus_yg = -y * gradient
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    i = int(np.flatnonzero(up)[np.argmax(minus_yg[up])])
    j = int(np.flatnonzero(low)[np.argmin(minus_yg[low])])
    return i, j, float(minus_yg[i] - minus_yg[j])


def _rho(y: np.ndarray, alpha: np.ndarray, gradient: np.ndarray, C: float) -> float:
    y_gradient = y * gradient
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(y_gradient[free].mean())
    at_upper = alpha >= C
    upper_side = (at_upper & (y < 0)) | (~at_upper & (y > 0))
    ub = y_gradient[upper_side].min() if upper_side.any() else np.inf
    lb = y_gradient[~upper_side].max() if (~upper_side).any() else -np.inf
    return float((ub + lb) / 2.0)


def hik_svm_train(histograms, labels, C: float = config.SVM_C, tol: float = config.SVM_TOLERANCE,
                  max_iter: int = config.SVM_MAX_ITER) -> HikSvmModel:
    """Soft-margin dual SVM with the intersection kernel, two-coordinate SMO.

    Labels are booleans or +-1. Minimizes 0.5 a'Qa - e'a subject to
    0 <= a <= C and y'a = 0.
    """
    if C <= 0:
        raise ValueError(f"C must be > 0, got {C}")
    x = _as_histogram_matrix(histograms)
    labels = np.asarray(labels)
    y = np.where(labels.astype(bool) if labels.dtype == bool else labels > 0, 1.0, -1.0)
    if y.size != x.shape[0]:
        raise DimensionError(f"{x.shape[0]} histograms but {y.size} labels")
    if np.unique(y).size < 2:
        raise ValueError("SVM training needs both classes")

    kernel = hik_gram(x)
    q = (y[:, None] * y[None, :]) * kernel
    alpha = np.zeros(y.size)
    gradient = -np.ones(y.size)
    violation, iterations, converged = np.inf, 0, False
    tau = 1e-12

    while iterations < max_iter:
        i, j, violation = _select_working_pair(y, alpha, gradient, C)
        if i < 0 or violation < tol:
            converged = True
            break
        iterations += 1
        old_i, old_j = alpha[i], alpha[j]
        quad = max(kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j], tau)
        if y[i] != y[j]:
            delta = (-gradient[i] - gradient[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            else:
                if alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, -diff
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, C + diff
        else:
            delta = (gradient[i] - gradient[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            else:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, total
                if alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, total
        gradient += q[:, i] * (alpha[i] - old_i) + q[:, j] * (alpha[j] - old_j)

    if not converged:
        logger.warning(f"HIK-SVM stopped after {iterations} iterations with KKT violation {violation:.3g}")
    support = alpha > 0
    logger.debug(f"HIK-SVM: {int(support.sum())} support vectors after {iterations} iterations")
    return HikSvmModel(
        support_vectors=x[support],
        dual_coef=(y * alpha)[support],
        bias=-_rho(y, alpha, gradient, C),
        C=C,
        kkt_violation=max(float(violation), 0.0),
        converged=converged,
        iterations=iterations,
    )


def hik_svm_decision(model: HikSvmModel, histograms) -> np.ndarray:
    x = _as_histogram_matrix(histograms)
    if model.support_vectors.shape[0] == 0:
        return np.full(x.shape[0], model.bias)
    return hik_gram(x, model.support_vectors) @ model.dual_coef + model.bias


def hik_svm_predict(model: HikSvmModel, h) -> bool:
    """True when the decision function is positive."""
    return bool(hik_svm_decision(model, [h])[0] > 0)


# ===========================================
# SYNTHETIC VIDEO PAIRS
# ===========================================

@dataclass(frozen=True)
class VideoPair:
    scores: Matrix
    same: bool


def make_video_score_pairs(n_pairs: int, seed: int, same_mean: float = 0.6, diff_mean: float = 0.1,
                           sd: float = 0.1, bad_frame_mean: float = -0.1, bad_frame_max: float = 0.6,
                           pair_shift_sd: float = 0.1, frames: Tuple[int, int] = (6, 12)) -> List[VideoPair]:
    """Synthetic frame-score matrices for alternating same/different video pairs.

    Same-identity pairs carry a random share (up to ``bad_frame_max``) of
    badly captured frames whose rows score around ``bad_frame_mean``; every
    pair gets a shared offset with deviation ``pair_shift_sd``.
    """
    rng = make_rng(seed)
    pairs = []
    for index in range(n_pairs):
        same = index % 2 == 0
        rows, cols = rng.integers(frames[0], frames[1] + 1, size=2)
        shift = rng.normal(0.0, pair_shift_sd)
        scores = rng.normal((same_mean if same else diff_mean) + shift, sd, size=(rows, cols))
        if same:
            bad_rows = int(round(rng.uniform(0.0, bad_frame_max) * rows))
            scores[:bad_rows] = rng.normal(bad_frame_mean + shift, sd, size=(bad_rows, cols))
        pairs.append(VideoPair(scores=np.clip(scores, -1.0, 1.0), same=same))
    return pairs


@dataclass(frozen=True)
class VideoEvalResult:
    hik_accuracy: float
    mean_score_accuracy: float

    @property
    def margin(self) -> float:
        return self.hik_accuracy - self.mean_score_accuracy


def evaluate_video_pairs(pairs: Sequence[VideoPair], k: int = config.KFOLD_SPLITS, C: float = config.SVM_C,
                         bins: int = config.HISTOGRAM_BINS) -> VideoEvalResult:
    """k-fold accuracy of HIK-SVM on score histograms against mean-score thresholding."""
    histograms = np.array([histogram_from_scores(pair.scores, bins).normalized() for pair in pairs])
    means = np.array([mean_score(pair.scores) for pair in pairs])
    same = np.array([pair.same for pair in pairs], dtype=bool)
    folds = assign_folds(len(pairs), k)

    hik_accuracies = []
    for fold in range(k):
        held_out = folds == fold
        model = hik_svm_train(histograms[~held_out], same[~held_out], C)
        predicted = hik_svm_decision(model, histograms[held_out]) > 0
        hik_accuracies.append(float(np.mean(predicted == same[held_out])))
    hik_accuracy = float(np.mean(hik_accuracies))
    mean_accuracy = kfold_accuracy_from_scores(means, same, folds).mean
    logger.info(f"Video pairs: HIK-SVM {hik_accuracy:.4f} vs mean score {mean_accuracy:.4f}")
    return VideoEvalResult(hik_accuracy=hik_accuracy, mean_score_accuracy=mean_accuracy)
