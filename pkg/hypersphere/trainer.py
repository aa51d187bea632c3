"""
Desk-scale training harness: data loaders, a small MLP embedding network,
SGD with momentum, snapshots, and the feature-geometry exports.
"""
import gzip
import struct
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Deque, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import config
from hypersphere.exceptions import DimensionError, DivergenceError, FormatError
from hypersphere.linalg import Matrix, as_matrix, make_rng
from hypersphere.losses import AgentMatrix, LossConfig, LossKind, compute_loss, predict_classes
from hypersphere.theory import DistortionTracker, agent_distortion_bound, tracker_update
from utils.data_parser import data_parser
from utils.logger import logger

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


# ===========================================
# DATA
# ===========================================

class DataSource(str, Enum):
    SYNTHETIC_BLOBS = "blobs"
    MNIST_IDX = "mnist"


@dataclass(frozen=True)
class Dataset:
    """Row samples with integer class labels. An empty dataset is allowed."""
    samples: Matrix
    labels: np.ndarray
    source: DataSource
    image_shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "samples", as_matrix(self.samples, "samples"))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if self.labels.shape != (self.samples.shape[0],):
            raise DimensionError(f"{self.samples.shape[0]} samples but labels have shape {self.labels.shape}")
        if self.labels.size:
            if self.labels.min() < 0:
                raise ValueError("labels must be non-negative")
            if np.unique(self.labels).size < 2:
                raise ValueError("a dataset needs at least 2 classes")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def input_dim(self) -> int:
        return self.samples.shape[1]


def make_blobs(n_classes: int, per_class: int, dim: int, spread: float, seed: int, radius: float = 1.0) -> Dataset:
    """Isotropic Gaussian clusters around random directions scaled to ``radius``."""
    rng = make_rng(seed)
    centers = rng.standard_normal((n_classes, dim))
    centers = radius * centers / np.linalg.norm(centers, axis=1, keepdims=True)
    labels = np.repeat(np.arange(n_classes), per_class)
    samples = centers[labels] + spread * rng.standard_normal((labels.size, dim))
    return Dataset(samples=samples, labels=labels, source=DataSource.SYNTHETIC_BLOBS)


def _read_bytes(path: str) -> bytes:
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as f:
                return f.read()
        return path.read_bytes()
    except FileNotFoundError:
        logger.error(f"IDX file not found: {path}")
        raise


def _idx_header(payload: bytes, expected_magic: int, n_dims: int, kind: str) -> Tuple[int, ...]:
    header_size = 4 * (1 + n_dims)
    if len(payload) < header_size:
        raise FormatError(f"{kind} header", f"truncated: {len(payload)} bytes")
    magic, *dims = struct.unpack(f">{1 + n_dims}I", payload[:header_size])
    if magic != expected_magic:
        raise FormatError(f"{kind} magic", f"expected {expected_magic}, got {magic}")
    return tuple(dims)


def load_mnist_idx(images_path: str, labels_path: str, limit: Optional[int] = None) -> Dataset:
    """Read an IDX image/label pair (big-endian, magic 2051/2049); pixels scaled to [0, 1]."""
    image_bytes = _read_bytes(images_path)
    label_bytes = _read_bytes(labels_path)

    count, rows, cols = _idx_header(image_bytes, IDX_IMAGE_MAGIC, 3, "images")
    (label_count,) = _idx_header(label_bytes, IDX_LABEL_MAGIC, 1, "labels")
    if count != label_count:
        raise FormatError("count", f"{count} images but {label_count} labels")

    pixels = image_bytes[16:]
    if len(pixels) < count * rows * cols:
        raise FormatError("images pixels", f"truncated: expected {count * rows * cols} bytes, got {len(pixels)}")
    raw_labels = label_bytes[8:]
    if len(raw_labels) < count:
        raise FormatError("labels data", f"truncated: expected {count} bytes, got {len(raw_labels)}")

    images = np.frombuffer(pixels, dtype=np.uint8, count=count * rows * cols).reshape(count, rows * cols)
    labels = np.frombuffer(raw_labels, dtype=np.uint8, count=count).astype(np.int64)
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    logger.info(f"Loaded {labels.size} IDX images of {rows}x{cols}")
    return Dataset(samples=images.astype(np.float64) / 255.0, labels=labels,
                   source=DataSource.MNIST_IDX, image_shape=(rows, cols))


def mirror_images(samples: Matrix, image_shape: Tuple[int, int]) -> Matrix:
    """Horizontal flip of flattened row-major images."""
    rows, cols = image_shape
    samples = as_matrix(samples, "samples")
    return samples.reshape(-1, rows, cols)[:, :, ::-1].reshape(samples.shape[0], rows * cols)


# ===========================================
# NETWORK
# ===========================================

class EmbeddingNet:
    """MLP with rectifier hidden layers; the final feature layer has no bias."""

    def __init__(self, layer_sizes: Sequence[int], weights: List[Matrix], biases: List[np.ndarray]):
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and a feature layer")
        if len(weights) != len(layer_sizes) - 1 or len(biases) != len(layer_sizes) - 2:
            raise DimensionError("parameter count does not match the layer sizes")
        for index, w in enumerate(weights):
            if w.shape != (layer_sizes[index], layer_sizes[index + 1]):
                raise DimensionError(f"layer {index} weight has shape {w.shape}")
        self.layer_sizes = list(layer_sizes)
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]

    @classmethod
    def create(cls, layer_sizes: Sequence[int], seed: int) -> "EmbeddingNet":
        """He-initialized network."""
        rng = make_rng(seed)
        weights = [rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
                   for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:])]
        biases = [np.zeros(size) for size in layer_sizes[1:-1]]
        return cls(layer_sizes, weights, biases)

    @classmethod
    def from_snapshot(cls, snapshot: "Snapshot") -> "EmbeddingNet":
        sizes = [snapshot.weights[0].shape[0]] + [w.shape[1] for w in snapshot.weights]
        return cls(sizes, snapshot.weights, snapshot.biases)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def feature_dim(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, x: Matrix) -> Tuple[Matrix, list]:
        """Features and the cache needed by backward."""
        hidden = as_matrix(x, "network input")
        if hidden.shape[1] != self.input_dim:
            raise DimensionError(f"network expects {self.input_dim} inputs, got {hidden.shape[1]}")
        cache = []
        last = len(self.weights) - 1
        for index, w in enumerate(self.weights):
            pre_activation = hidden @ w
            if index < last:
                pre_activation = pre_activation + self.biases[index]
            cache.append((hidden, pre_activation))
            hidden = np.maximum(pre_activation, 0.0) if index < last else pre_activation
        return hidden, cache

    def backward(self, cache: list, grad_features: Matrix) -> Tuple[List[Matrix], List[np.ndarray]]:
        grad_weights: List[Matrix] = [None] * len(self.weights)
        grad_biases: List[np.ndarray] = [None] * len(self.biases)
        grad = grad_features
        last = len(self.weights) - 1
        for index in range(last, -1, -1):
            layer_input, pre_activation = cache[index]
            if index < last:
                grad = grad * (pre_activation > 0)
                grad_biases[index] = grad.sum(axis=0)
            grad_weights[index] = layer_input.T @ grad
            grad = grad @ self.weights[index].T
        return grad_weights, grad_biases

    def embed(self, samples: Matrix, image_shape: Optional[Tuple[int, int]] = None,
              mirror_merge: bool = False) -> Matrix:
        """Features; with ``mirror_merge`` the features of the mirrored images are added."""
        features, _ = self.forward(samples)
        if mirror_merge:
            if image_shape is None:
                raise ValueError("mirror merge needs image-shaped samples")
            mirrored, _ = self.forward(mirror_images(samples, image_shape))
            features = features + mirrored
        return features


# ===========================================
# OPTIMIZER
# ===========================================

class SgdMomentum:
    """v <- momentum * v + lr * (g + weight_decay * theta); theta <- theta - v."""

    def __init__(self, lr: float, momentum: float, weight_decay: float):
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = {}

    def step(self, name: str, param, grad, decay: bool = True):
        gradient = grad + self.weight_decay * param if decay else grad
        velocity = self.momentum * self.velocity.get(name, 0.0) + self.lr * gradient
        self.velocity[name] = velocity
        return param - velocity


# ===========================================
# TRAINING
# ===========================================

@dataclass(frozen=True)
class TrainConfig:
    loss: LossConfig = field(default_factory=LossConfig)
    lr: float = config.LEARNING_RATE
    momentum: float = config.MOMENTUM
    weight_decay: float = config.WEIGHT_DECAY
    batch_size: int = config.BATCH_SIZE
    iterations: int = config.ITERATIONS
    seed: int = config.DEFAULT_SEED
    snapshot_every: int = config.SNAPSHOT_EVERY
    snapshot_count: int = config.SNAPSHOT_COUNT
    pretrain_iterations: int = 0
    tracker_decay: float = config.TRACKER_DECAY
    mirror_augment: bool = False
    log_every: int = config.LOG_EVERY

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 0 or self.pretrain_iterations < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.snapshot_every < 1 or self.snapshot_count < 0:
            raise ValueError("snapshot_every must be >= 1 and snapshot_count >= 0")


@dataclass
class Snapshot:
    iteration: int
    weights: List[Matrix]
    biases: List[np.ndarray]
    agents: AgentMatrix
    scale: float
    class_bias: Optional[np.ndarray] = None


@dataclass
class TrainReport:
    loss_curve: List[float]
    accuracy_curve: List[float]
    scale_curve: List[float]
    agent_norms: Matrix
    net: EmbeddingNet
    agents: AgentMatrix
    scale: float
    class_bias: Optional[np.ndarray]
    snapshots: List[Snapshot]
    distortion: float
    final_accuracy: float


def _take_snapshot(iteration: int, net: EmbeddingNet, agents: AgentMatrix, scale: float,
                   class_bias: Optional[np.ndarray]) -> Snapshot:
    return Snapshot(
        iteration=iteration,
        weights=[w.copy() for w in net.weights],
        biases=[b.copy() for b in net.biases],
        agents=AgentMatrix(agents.w.copy()),
        scale=scale,
        class_bias=None if class_bias is None else class_bias.copy(),
    )


def dataset_accuracy(net: EmbeddingNet, agents: AgentMatrix, data: Dataset, loss: LossConfig,
                     class_bias: Optional[np.ndarray] = None) -> float:
    if len(data) == 0:
        return 0.0
    features, _ = net.forward(data.samples)
    return float(np.mean(predict_classes(features, agents, loss, class_bias) == data.labels))


def train(net: EmbeddingNet, data: Dataset, cfg: TrainConfig, agents: Optional[AgentMatrix] = None) -> TrainReport:
    """Train ``net`` (in place) and a per-class agent matrix with SGD + momentum."""
    if data.input_dim != net.input_dim:
        raise DimensionError(f"data has {data.input_dim} inputs but the network expects {net.input_dim}")
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = make_rng(cfg.seed)
    n_classes = data.n_classes
    if agents is None:
        agents = AgentMatrix.random(net.feature_dim, n_classes, rng)
    elif agents.w.shape != (net.feature_dim, n_classes):
        raise DimensionError(f"agents have shape {agents.w.shape}, expected {(net.feature_dim, n_classes)}")

    pretrain_loss = LossConfig(kind=LossKind.BASELINE_SOFTMAX)
    class_bias = np.zeros(n_classes) if cfg.loss.use_bias else None
    scale = float(cfg.loss.scale)
    optimizer = SgdMomentum(cfg.lr, cfg.momentum, cfg.weight_decay)
    tracker = DistortionTracker(decay=cfg.tracker_decay)
    snapshots: Deque[Snapshot] = deque(maxlen=cfg.snapshot_count if cfg.snapshot_count else None)
    loss_curve, accuracy_curve, scale_curve, agent_norms = [], [], [], []
    full_batch = cfg.batch_size >= len(data)
    mirror = cfg.mirror_augment and data.image_shape is not None

    logger.info(f"Training {cfg.loss.kind.value} for {cfg.iterations} iterations "
                f"on {len(data)} samples / {n_classes} classes (seed {cfg.seed})")
    for iteration in range(cfg.iterations):
        loss_cfg = pretrain_loss if iteration < cfg.pretrain_iterations else cfg.loss
        indices = np.arange(len(data)) if full_batch else rng.choice(len(data), cfg.batch_size, replace=False)
        batch, labels = data.samples[indices], data.labels[indices]
        if mirror:
            flip = rng.random(batch.shape[0]) < 0.5
            batch = batch.copy()
            batch[flip] = mirror_images(batch[flip], data.image_shape)

        features, cache = net.forward(batch)
        output = compute_loss(features, agents, labels, loss_cfg, scale=scale, bias=class_bias)
        if not np.isfinite(output.value):
            logger.error(f"Loss became {output.value} at iteration {iteration}")
            raise DivergenceError(iteration, output.value)

        loss_curve.append(output.value)
        accuracy_curve.append(float(np.mean(predict_classes(features, agents, loss_cfg, class_bias) == labels)))
        tracker = tracker_update(tracker, agent_distortion_bound(features, agents, labels))

        grad_weights, grad_biases = net.backward(cache, output.grad_features)
        for index, grad in enumerate(grad_weights):
            net.weights[index] = optimizer.step(f"w{index}", net.weights[index], grad)
        for index, grad in enumerate(grad_biases):
            net.biases[index] = optimizer.step(f"b{index}", net.biases[index], grad, decay=False)
        agents = AgentMatrix(optimizer.step("agents", agents.w, output.grad_weights))
        if class_bias is not None and output.grad_bias is not None:
            class_bias = optimizer.step("class_bias", class_bias, output.grad_bias, decay=False)
        if loss_cfg.learn_scale and output.grad_scale is not None:
            scale = max(float(optimizer.step("scale", scale, output.grad_scale, decay=False)), config.SCALE_FLOOR)

        scale_curve.append(scale)
        agent_norms.append(np.linalg.norm(agents.w, axis=0))
        if cfg.snapshot_count and (iteration + 1) % cfg.snapshot_every == 0:
            snapshots.append(_take_snapshot(iteration + 1, net, agents, scale, class_bias))
        if cfg.log_every and (iteration + 1) % cfg.log_every == 0:
            logger.log_iteration(iteration + 1, output.value, accuracy_curve[-1],
                                 scale if loss_cfg.uses_scale else None)

    final_accuracy = dataset_accuracy(net, agents, data, cfg.loss, class_bias)
    logger.info(f"Training finished: accuracy {final_accuracy:.4f}, distortion bound (moving average) {tracker.ema:.4f}")
    return TrainReport(
        loss_curve=loss_curve,
        accuracy_curve=accuracy_curve,
        scale_curve=scale_curve,
        agent_norms=np.array(agent_norms).reshape(len(agent_norms), n_classes),
        net=net,
        agents=agents,
        scale=scale,
        class_bias=class_bias,
        snapshots=list(snapshots),
        distortion=tracker.ema,
        final_accuracy=final_accuracy,
    )


# ===========================================
# SNAPSHOTS
# ===========================================

def save_snapshot(snapshot: Snapshot, path: str) -> Path:
    """Blob layout: meta [iteration, n_layers, has_class_bias, scale], weights, biases, agents, class bias."""
    has_bias = snapshot.class_bias is not None
    meta = np.array([snapshot.iteration, len(snapshot.weights), float(has_bias), snapshot.scale])
    matrices = [meta] + snapshot.weights + snapshot.biases + [snapshot.agents.w]
    if has_bias:
        matrices.append(snapshot.class_bias)
    return data_parser.write_matrices(matrices, path)


def load_snapshot(path: str) -> Snapshot:
    matrices = data_parser.read_matrices(path)
    if not matrices or matrices[0].shape != (4,):
        raise FormatError("snapshot meta", "missing or malformed")
    iteration, n_layers, has_bias, scale = matrices[0]
    n_layers, has_bias = int(n_layers), bool(has_bias)
    expected = 1 + n_layers + (n_layers - 1) + 1 + int(has_bias)
    if len(matrices) != expected:
        raise FormatError("snapshot matrices", f"expected {expected}, got {len(matrices)}")
    weights = matrices[1:1 + n_layers]
    biases = matrices[1 + n_layers:2 * n_layers]
    return Snapshot(
        iteration=int(iteration),
        weights=weights,
        biases=biases,
        agents=AgentMatrix(matrices[2 * n_layers]),
        scale=float(scale),
        class_bias=matrices[2 * n_layers + 1] if has_bias else None,
    )


# ===========================================
# FEATURE GEOMETRY EXPORTS
# ===========================================

def radialness(features: Matrix, labels: np.ndarray) -> float:
    """Mean |cos(feature, mean feature of its class)|."""
    features = as_matrix(features, "features")
    labels = np.asarray(labels)
    scores = np.empty(labels.size)
    for label in np.unique(labels):
        members = labels == label
        center = features[members].mean(axis=0)
        numerator = features[members] @ center
        denominator = np.linalg.norm(features[members], axis=1) * np.linalg.norm(center) + config.NORM_EPSILON
        scores[members] = np.abs(numerator / denominator)
    return float(scores.mean()) if scores.size else 0.0


def near_origin_classes(features: Matrix, labels: np.ndarray, ratio: float = 0.2) -> List[int]:
    """Classes whose mean feature norm is below ``ratio`` times the overall mean norm."""
    norms = np.linalg.norm(as_matrix(features, "features"), axis=1)
    labels = np.asarray(labels)
    if norms.size == 0:
        return []
    overall = norms.mean()
    return [int(label) for label in np.unique(labels) if norms[labels == label].mean() < ratio * overall]


def export_feature_scatter(net: EmbeddingNet, data: Dataset, path: str) -> Path:
    """CSV of (feature_x, feature_y, label) for 2-D features."""
    if net.feature_dim != 2:
        raise DimensionError(f"scatter export needs 2-D features, network emits {net.feature_dim}")
    rows = []
    if len(data):
        features, _ = net.forward(data.samples)
        rows = [{"feature_x": float(x), "feature_y": float(y), "label": int(label)}
                for (x, y), label in zip(features, data.labels)]
    else:
        logger.warning("Scatter export of an empty dataset: writing the header only")
    return data_parser.write_csv(rows, path, fieldnames=["feature_x", "feature_y", "label"])


def export_loss_curve(report: TrainReport, path: str) -> Path:
    rows = [{"iteration": index + 1, "loss": loss, "accuracy": accuracy, "scale": scale}
            for index, (loss, accuracy, scale) in enumerate(zip(report.loss_curve, report.accuracy_curve,
                                                                report.scale_curve))]
    return data_parser.write_csv(rows, path, fieldnames=["iteration", "loss", "accuracy", "scale"])
