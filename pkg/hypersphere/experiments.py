"""
Loss-weight sweep: softmax plus a weighted C-contrastive or center term,
trained once per weight and scored by held-out pair accuracy.
"""
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

from config.settings import config
from hypersphere.evaluation import ScoreKind, kfold_accuracy, make_pair_set
from hypersphere.losses import ComboTerm, LossKind
from hypersphere.trainer import Dataset, EmbeddingNet, TrainConfig, dataset_accuracy, train
from utils.logger import logger


@dataclass(frozen=True)
class SweepPoint:
    combo_with: ComboTerm
    weight: float
    pair_accuracy: float
    train_accuracy: float


def split_alternate(data: Dataset) -> Tuple[Dataset, Dataset]:
    """Even rows for training, odd rows held out for pair evaluation."""
    if len(data) < 4:
        raise ValueError(f"need at least 4 samples to split, got {len(data)}")
    first = Dataset(data.samples[::2], data.labels[::2], data.source, data.image_shape)
    second = Dataset(data.samples[1::2], data.labels[1::2], data.source, data.image_shape)
    return first, second


def loss_weight_sweep(data: Dataset, layer_sizes: Sequence[int], base: TrainConfig, weights: Sequence[float],
                      terms: Sequence[ComboTerm] = tuple(ComboTerm), n_pairs: int = config.SWEEP_PAIRS,
                      k: int = config.KFOLD_SPLITS, kind: ScoreKind = ScoreKind.COSINE) -> List[SweepPoint]:
    """One training run per (term, weight); every run starts from the same seed."""
    if not weights:
        raise ValueError("no loss weights to sweep")
    training, held_out = split_alternate(data)
    points = []
    for term in terms:
        for weight in weights:
            loss = replace(base.loss, kind=LossKind.COMBINATION, combo_with=ComboTerm(term),
                           combo_weight=weight, margin=None)
            report = train(EmbeddingNet.create(layer_sizes, base.seed), training, replace(base, loss=loss))
            features, _ = report.net.forward(held_out.samples)
            pairs = make_pair_set(features, held_out.labels, n_pairs, base.seed, k)
            point = SweepPoint(
                combo_with=ComboTerm(term),
                weight=float(weight),
                pair_accuracy=kfold_accuracy(pairs, k, kind=kind).mean,
                train_accuracy=dataset_accuracy(report.net, report.agents, training, loss, report.class_bias),
            )
            logger.info(f"softmax + {weight:g} * {point.combo_with.value}: pair accuracy {point.pair_accuracy:.4f}, "
                        f"train accuracy {point.train_accuracy:.4f}")
            points.append(point)
    return points
