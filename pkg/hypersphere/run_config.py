"""
Run configuration: the INI schema the CLI accepts and its conversion into
datasets, loss and training configs. Keys left out fall back to Config.
"""
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from config.settings import config
from hypersphere.evaluation import ScoreKind
from hypersphere.losses import ComboTerm, LossConfig, LossKind, NormalizationMode
from hypersphere.trainer import DataSource, Dataset, TrainConfig, load_mnist_idx, make_blobs
from utils.config_parser import ConfigError, FieldSpec, parse_bool, parse_int_list, read_run_config


class Command(str, Enum):
    TRAIN = "train"
    SCATTER = "scatter"
    BOUNDS = "bounds"
    GRADCHECK = "gradcheck"
    EVAL_PAIRS = "eval-pairs"
    EVAL_VIDEO = "eval-video"
    PROP_CHECK = "prop-check"
    SWEEP = "sweep"


def _positive(value) -> bool:
    return value > 0


def _non_negative(value) -> bool:
    return value >= 0


def _choice(enum_type):
    def parse(raw: str):
        return enum_type(raw.strip())
    return parse


def _float_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


def _choice_list(enum_type):
    def parse(raw: str):
        return [enum_type(part.strip()) for part in raw.split(",") if part.strip()]
    return parse


POSITIVE = "must be > 0"
NON_NEGATIVE = "must be >= 0"

RUN_SCHEMA: Dict[str, Dict[str, FieldSpec]] = {
    "run": {
        "seed": FieldSpec(int, _non_negative, NON_NEGATIVE),
        "out_dir": FieldSpec(str),
    },
    "data": {
        "source": FieldSpec(_choice(DataSource)),
        "n_classes": FieldSpec(int, lambda v: v >= 2, "must be >= 2"),
        "per_class": FieldSpec(int, _positive, POSITIVE),
        "dim": FieldSpec(int, _positive, POSITIVE),
        "spread": FieldSpec(float, _non_negative, NON_NEGATIVE),
        "radius": FieldSpec(float, _positive, POSITIVE),
        "images": FieldSpec(str),
        "labels": FieldSpec(str),
        "limit": FieldSpec(int, _positive, POSITIVE),
    },
    "model": {
        "hidden": FieldSpec(parse_int_list, lambda v: all(size > 0 for size in v), "sizes must be > 0"),
        "feature_dim": FieldSpec(int, _positive, POSITIVE),
    },
    "loss": {
        "kind": FieldSpec(_choice(LossKind)),
        "scale": FieldSpec(float, _positive, POSITIVE),
        "learn_scale": FieldSpec(parse_bool),
        "margin": FieldSpec(float, _non_negative, NON_NEGATIVE),
        "combo_weight": FieldSpec(float, _non_negative, NON_NEGATIVE),
        "combo_with": FieldSpec(_choice(ComboTerm)),
        "use_bias": FieldSpec(parse_bool),
        "normalization": FieldSpec(_choice(NormalizationMode)),
    },
    "train": {
        "lr": FieldSpec(float, _positive, POSITIVE),
        "momentum": FieldSpec(float, lambda v: 0.0 <= v < 1.0, "must lie in [0, 1)"),
        "weight_decay": FieldSpec(float, _non_negative, NON_NEGATIVE),
        "batch_size": FieldSpec(int, _positive, POSITIVE),
        "iterations": FieldSpec(int, _non_negative, NON_NEGATIVE),
        "snapshot_every": FieldSpec(int, _positive, POSITIVE),
        "snapshot_count": FieldSpec(int, _non_negative, NON_NEGATIVE),
        "pretrain_iterations": FieldSpec(int, _non_negative, NON_NEGATIVE),
        "tracker_decay": FieldSpec(float, lambda v: 0.0 < v < 1.0, "must lie in (0, 1)"),
        "mirror_augment": FieldSpec(parse_bool),
        "log_every": FieldSpec(int, _non_negative, NON_NEGATIVE),
    },
    "eval": {
        "folds": FieldSpec(int, lambda v: v >= 2, "must be >= 2"),
        "far": FieldSpec(_float_list, lambda v: all(0.0 < far < 1.0 for far in v), "each must lie in (0, 1)"),
        "pca": FieldSpec(parse_bool),
        "pca_keep": FieldSpec(int, _positive, POSITIVE),
        "metric": FieldSpec(_choice(ScoreKind)),
    },
    "sweep": {
        "weights": FieldSpec(_float_list, lambda v: bool(v) and all(w >= 0 for w in v), "needs weights >= 0"),
        "terms": FieldSpec(_choice_list(ComboTerm), bool, "needs at least one term"),
        "n_pairs": FieldSpec(int, lambda v: v >= 2, "must be >= 2"),
    },
    "video": {
        "n_pairs": FieldSpec(int, lambda v: v >= 2, "must be >= 2"),
        "seeds": FieldSpec(parse_int_list, bool, "needs at least one seed"),
        "same_mean": FieldSpec(float),
        "diff_mean": FieldSpec(float),
        "sd": FieldSpec(float, _non_negative, NON_NEGATIVE),
        "bad_frame_mean": FieldSpec(float),
        "bad_frame_max": FieldSpec(float, lambda v: 0.0 <= v <= 1.0, "must lie in [0, 1]"),
        "pair_shift_sd": FieldSpec(float, _non_negative, NON_NEGATIVE),
        "svm_c": FieldSpec(float, _positive, POSITIVE),
        "bins": FieldSpec(int, _positive, POSITIVE),
    },
}

# keys of [video] forwarded to make_video_score_pairs
VIDEO_GENERATOR_KEYS = ("same_mean", "diff_mean", "sd", "bad_frame_mean", "bad_frame_max", "pair_shift_sd")


@dataclass
class RunConfig:
    command: Command
    config_path: Optional[str]
    seed: int
    out_dir: str
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections.get(name, {})

    def dataset(self) -> Dataset:
        data = self.section("data")
        source = data.get("source", DataSource.SYNTHETIC_BLOBS)
        if source is DataSource.MNIST_IDX:
            if "images" not in data or "labels" not in data:
                raise ConfigError("[data] source = mnist needs 'images' and 'labels'")
            return load_mnist_idx(data["images"], data["labels"], data.get("limit"))
        return make_blobs(
            n_classes=data.get("n_classes", 3),
            per_class=data.get("per_class", 100),
            dim=data.get("dim", 2),
            spread=data.get("spread", 0.1),
            seed=self.seed,
            radius=data.get("radius", 1.0),
        )

    def layer_sizes(self, input_dim: int) -> List[int]:
        model = self.section("model")
        return [input_dim] + list(model.get("hidden", [32, 32])) + [model.get("feature_dim", 2)]

    def loss_config(self) -> LossConfig:
        try:
            return LossConfig(**self.section("loss"))
        except ValueError as e:
            raise ConfigError(f"[loss] {e}") from e

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(loss=self.loss_config(), seed=self.seed, **self.section("train"))
        except ValueError as e:
            raise ConfigError(f"[train] {e}") from e

    def video_generator_options(self) -> Dict[str, float]:
        video = self.section("video")
        return {key: video[key] for key in VIDEO_GENERATOR_KEYS if key in video}


def load_run_config(command: Command, config_path: Optional[str], seed: Optional[int] = None,
                    out_dir: Optional[str] = None) -> RunConfig:
    """Read and validate a run config; explicit seed/out_dir arguments win over the file."""
    sections = read_run_config(config_path, RUN_SCHEMA) if config_path else {}
    run = sections.get("run", {})
    resolved_seed = seed if seed is not None else run.get("seed", config.DEFAULT_SEED)
    resolved_out = out_dir or run.get("out_dir", config.OUTPUT_DIR)
    try:
        os.makedirs(resolved_out, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"output directory {resolved_out} is not writable: {e}") from e
    if not os.access(resolved_out, os.W_OK):
        raise ConfigError(f"output directory {resolved_out} is not writable")
    return RunConfig(command=Command(command), config_path=config_path, seed=resolved_seed,
                     out_dir=resolved_out, sections=sections)
