"""
Tests for run-config resolution.
"""
import os

import pytest

from hypersphere.evaluation import ScoreKind
from hypersphere.losses import ComboTerm, LossKind
from hypersphere.run_config import Command, load_run_config
from hypersphere.trainer import DataSource
from utils.config_parser import ConfigError


@pytest.mark.cli
class TestRunConfig:
    """Defaults, overrides and derived configs."""

    def test_defaults_without_file(self, out_dir):
        run_config = load_run_config(Command.EVAL_VIDEO, None, out_dir=str(out_dir))
        data = run_config.dataset()
        assert data.source is DataSource.SYNTHETIC_BLOBS
        assert (len(data), data.input_dim) == (300, 2)
        assert run_config.layer_sizes(2) == [2, 32, 32, 2]
        assert run_config.video_generator_options() == {}

    def test_explicit_seed_wins(self, tmp_path, out_dir):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nseed = 4\n")
        assert load_run_config(Command.TRAIN, str(path), out_dir=str(out_dir)).seed == 4
        assert load_run_config(Command.TRAIN, str(path), seed=9, out_dir=str(out_dir)).seed == 9

    def test_train_config_from_sections(self, tmp_path, out_dir):
        path = tmp_path / "run.ini"
        path.write_text("[loss]\nkind = c_triplet\n[train]\nlr = 0.05\niterations = 10\n[model]\nhidden = 4,5\n")
        run_config = load_run_config(Command.TRAIN, str(path), seed=1, out_dir=str(out_dir))
        train_config = run_config.train_config()
        assert train_config.loss.kind is LossKind.C_TRIPLET
        assert (train_config.lr, train_config.iterations, train_config.seed) == (0.05, 10, 1)
        assert run_config.layer_sizes(3) == [3, 4, 5, 2]

    def test_mnist_needs_paths(self, tmp_path, out_dir):
        path = tmp_path / "run.ini"
        path.write_text("[data]\nsource = mnist\n")
        with pytest.raises(ConfigError):
            load_run_config(Command.TRAIN, str(path), out_dir=str(out_dir)).dataset()

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(ConfigError):
            load_run_config(Command.TRAIN, None, out_dir=str(blocker / "sub"))

    def test_sweep_and_eval_sections(self, tmp_path, out_dir):
        path = tmp_path / "run.ini"
        path.write_text("[eval]\nmetric = euclidean\nfar = 0.01, 0.1\n[sweep]\nweights = 0, 0.5\nterms = center\n")
        run_config = load_run_config(Command.SWEEP, str(path), out_dir=str(out_dir))
        assert run_config.section("eval") == {"metric": ScoreKind.EUCLIDEAN, "far": [0.01, 0.1]}
        assert run_config.section("sweep") == {"weights": [0.0, 0.5], "terms": [ComboTerm.CENTER]}


@pytest.mark.cli
@pytest.mark.parametrize("name", ["train_blobs.ini", "scatter_bias.ini", "train_mnist.ini", "video.ini",
                                  "sweep_blobs.ini"])
def test_shipped_configs_validate(name, out_dir):
    root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    run_config = load_run_config(Command.TRAIN, os.path.join(root, "data", "configs", name), out_dir=str(out_dir))
    run_config.train_config()
