"""
Tests for the embedding network, the optimizer and the training loop.
"""
import numpy as np
import pytest

from hypersphere.exceptions import DimensionError, DivergenceError
from hypersphere.gradcheck import central_difference
from hypersphere.losses import AgentMatrix, LossConfig, LossKind
from hypersphere.theory import agent_distortion_bound, loss_lower_bound
from hypersphere.trainer import (
    DataSource,
    Dataset,
    EmbeddingNet,
    SgdMomentum,
    TrainConfig,
    export_feature_scatter,
    export_loss_curve,
    load_snapshot,
    make_blobs,
    near_origin_classes,
    radialness,
    save_snapshot,
    train,
)
from utils.data_parser import data_parser
from utils.logger import logger


def ring_blobs(n_classes: int, per_class: int, spread: float, seed: int, radius: float = 3.0) -> Dataset:
    """2-D clusters at evenly spaced angles."""
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    centers = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    labels = np.repeat(np.arange(n_classes), per_class)
    samples = centers[labels] + spread * rng.standard_normal((labels.size, 2))
    return Dataset(samples, labels, DataSource.SYNTHETIC_BLOBS)


def ten_blobs(seed: int = 0) -> Dataset:
    return make_blobs(10, 30, 16, 0.2, seed=seed, radius=3.0)


@pytest.mark.training
class TestEmbeddingNet:
    """MLP forward and backward."""

    def test_forward_shape_and_determinism(self, rng):
        x = rng.standard_normal((5, 4))
        first, second = EmbeddingNet.create([4, 8, 3], seed=1), EmbeddingNet.create([4, 8, 3], seed=1)
        assert first.forward(x)[0].shape == (5, 3)
        assert np.array_equal(first.forward(x)[0], second.forward(x)[0])

    def test_no_bias_on_feature_layer(self):
        net = EmbeddingNet.create([4, 8, 8, 2], seed=0)
        assert [b.shape for b in net.biases] == [(8,), (8,)]

    def test_backward_matches_finite_differences(self, rng):
        net = EmbeddingNet.create([3, 5, 2], seed=4)
        net.biases[0] += 0.3
        x = rng.standard_normal((4, 3))
        upstream = rng.standard_normal((4, 2))
        _, cache = net.forward(x)
        grad_weights, grad_biases = net.backward(cache, upstream)

        def objective_for(layer):
            def objective(w):
                original = net.weights[layer]
                net.weights[layer] = w
                value = float(np.sum(net.forward(x)[0] * upstream))
                net.weights[layer] = original
                return value
            return objective

        for layer in range(2):
            numeric = central_difference(objective_for(layer), net.weights[layer], 1e-6)
            assert np.allclose(grad_weights[layer], numeric, atol=1e-6)

        def bias_objective(b):
            original = net.biases[0]
            net.biases[0] = b
            value = float(np.sum(net.forward(x)[0] * upstream))
            net.biases[0] = original
            return value

        assert np.allclose(grad_biases[0], central_difference(bias_objective, net.biases[0], 1e-6), atol=1e-6)

    def test_wrong_input_width(self):
        with pytest.raises(DimensionError):
            EmbeddingNet.create([3, 2], seed=0).forward(np.ones((1, 4)))

    def test_mirror_merge_sums(self, rng):
        net = EmbeddingNet.create([4, 6, 2], seed=0)
        samples = rng.random((3, 4))
        merged = net.embed(samples, image_shape=(2, 2), mirror_merge=True)
        flipped = samples.reshape(3, 2, 2)[:, :, ::-1].reshape(3, 4)
        assert np.allclose(merged, net.forward(samples)[0] + net.forward(flipped)[0])


@pytest.mark.training
class TestSgdMomentum:
    """Velocity update."""

    def test_hand_steps(self):
        optimizer = SgdMomentum(lr=0.1, momentum=0.9, weight_decay=0.0)
        first = optimizer.step("p", 1.0, 1.0)
        second = optimizer.step("p", first, 1.0)
        assert first == pytest.approx(0.9)
        assert second == pytest.approx(0.71)

    def test_decay_only_when_requested(self):
        optimizer = SgdMomentum(lr=0.1, momentum=0.0, weight_decay=0.5)
        assert optimizer.step("w", 2.0, 0.0) == pytest.approx(1.9)
        assert optimizer.step("b", 2.0, 0.0, decay=False) == pytest.approx(2.0)


@pytest.mark.training
class TestTrainConfig:
    """Hyperparameter validation."""

    @pytest.mark.parametrize("overrides", [{"lr": 0.0}, {"momentum": 1.0}, {"batch_size": 0},
                                           {"weight_decay": -1.0}])
    def test_rejects_bad_values(self, overrides):
        with pytest.raises(ValueError):
            TrainConfig(**overrides)


@pytest.mark.training
class TestTraining:
    """Training loop behaviour."""

    def test_three_blobs_reach_high_accuracy(self):
        data = ring_blobs(3, 100, 0.1, seed=7)
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.SCALED_COSINE_SOFTMAX, scale=10.0), lr=0.01,
                          iterations=2000, seed=7)
        report = train(EmbeddingNet.create([2, 32, 32, 2], seed=7), data, cfg)
        logger.info(f"final accuracy {report.final_accuracy:.4f}, final loss {report.loss_curve[-1]:.4f}")
        assert report.final_accuracy >= 0.99

    def test_reproducible(self):
        data = ring_blobs(3, 40, 0.2, seed=1)
        cfg = TrainConfig(lr=0.01, iterations=60, batch_size=32, seed=3)
        first = train(EmbeddingNet.create([2, 16, 2], seed=3), data, cfg)
        second = train(EmbeddingNet.create([2, 16, 2], seed=3), data, cfg)
        assert np.array_equal(first.loss_curve, second.loss_curve)

    def test_agent_norms_never_shrink_without_decay(self):
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.SCALED_COSINE_SOFTMAX, scale=10.0), lr=0.05,
                          momentum=0.0, weight_decay=0.0, iterations=200, batch_size=64, seed=2)
        report = train(EmbeddingNet.create([16, 32, 8], seed=2), ten_blobs(), cfg)
        assert np.all(np.diff(report.agent_norms, axis=0) >= -1e-12)

    def test_agent_norms_bounded_with_decay(self):
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.SCALED_COSINE_SOFTMAX, scale=10.0), lr=0.05,
                          iterations=500, batch_size=64, seed=2)
        report = train(EmbeddingNet.create([16, 32, 8], seed=2), ten_blobs(), cfg)
        assert np.all(np.isfinite(report.agent_norms))
        assert report.agent_norms[-1].max() < 10.0 * report.agent_norms[0].max()

    def test_tiny_steps_never_increase_full_batch_loss(self):
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.SCALED_COSINE_SOFTMAX, scale=10.0), lr=1e-4,
                          momentum=0.0, weight_decay=0.0, iterations=50, batch_size=10000, seed=5)
        report = train(EmbeddingNet.create([2, 16, 2], seed=5), ring_blobs(3, 30, 0.3, seed=5), cfg)
        assert np.all(np.diff(report.loss_curve) <= 1e-12)

    def test_snapshots_keep_the_last_ones(self):
        cfg = TrainConfig(lr=0.01, iterations=50, batch_size=32, snapshot_every=10, snapshot_count=3, seed=0)
        report = train(EmbeddingNet.create([2, 8, 2], seed=0), ring_blobs(3, 20, 0.2, seed=0), cfg)
        assert [snapshot.iteration for snapshot in report.snapshots] == [30, 40, 50]

    def test_pretraining_then_switch(self):
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.C_TRIPLET), lr=0.01, iterations=40, batch_size=32,
                          pretrain_iterations=20, seed=0)
        report = train(EmbeddingNet.create([2, 8, 2], seed=0), ring_blobs(3, 20, 0.2, seed=0), cfg)
        assert len(report.loss_curve) == 40
        assert report.scale_curve == [report.scale] * 40

    def test_learned_scale_moves(self):
        cfg = TrainConfig(loss=LossConfig(learn_scale=True, scale=2.0), lr=0.01, iterations=100,
                          batch_size=64, seed=0)
        report = train(EmbeddingNet.create([2, 16, 2], seed=0), ring_blobs(3, 40, 0.1, seed=0), cfg)
        assert report.scale != 2.0
        assert report.scale > 0

    def test_divergence_reports_iteration(self):
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.BASELINE_SOFTMAX), lr=1e30, momentum=0.0,
                          weight_decay=0.0, iterations=50, batch_size=10000, seed=0)
        with np.errstate(all="ignore"):
            with pytest.raises(DivergenceError) as exc_info:
                train(EmbeddingNet.create([2, 2], seed=0), ring_blobs(3, 20, 0.2, seed=0), cfg)
        logger.info(str(exc_info.value))
        assert exc_info.value.iteration >= 1

    def test_input_width_mismatch(self):
        with pytest.raises(DimensionError):
            train(EmbeddingNet.create([3, 4, 2], seed=0), ring_blobs(3, 5, 0.1, seed=0), TrainConfig(iterations=1))

    def test_distortion_after_one_step(self, rng):
        data = ten_blobs(seed=2)
        net = EmbeddingNet.create([16, 32, 8], seed=2)
        agents = AgentMatrix.random(8, 10, rng)
        features, _ = net.forward(data.samples)
        first_batch = agent_distortion_bound(features, agents, data.labels)
        cfg = TrainConfig(lr=0.01, iterations=1, batch_size=len(data), tracker_decay=0.9, seed=2)
        report = train(net, data, cfg, agents=agents)
        assert report.distortion == pytest.approx(0.1 * first_batch, rel=1e-9)

    def test_distortion_falls_while_training(self, rng):
        data = ten_blobs(seed=4)
        net = EmbeddingNet.create([16, 32, 8], seed=4)
        agents = AgentMatrix.random(8, 10, rng)
        initial = agent_distortion_bound(net.forward(data.samples)[0], agents, data.labels)
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.C_CONTRASTIVE), lr=0.01, iterations=400, batch_size=64,
                          tracker_decay=0.5, seed=4)
        report = train(net, data, cfg, agents=agents)
        logger.info(f"distortion: initial {initial:.4f}, moving average after training {report.distortion:.4f}")
        assert 0.0 < report.distortion < initial
        assert report.distortion <= 4.0


@pytest.mark.training
@pytest.mark.slow
@pytest.mark.acceptance
class TestConvergenceFailure:
    """Normalized softmax with a fixed unit scale stalls at the loss bound."""

    @pytest.mark.timeout(300)
    def test_unit_scale_plateaus_at_bound_and_learned_scale_escapes(self):
        data = ten_blobs(seed=4)
        base = dict(lr=0.05, momentum=0.9, iterations=3000, batch_size=len(data), seed=4)
        bound = loss_lower_bound(10, 1.0)

        fixed = train(EmbeddingNet.create([16, 64, 16], seed=4), data,
                      TrainConfig(loss=LossConfig(scale=1.0), **base))
        logger.info(f"s=1 final loss {fixed.loss_curve[-1]:.4f} vs bound {bound:.4f}")
        assert min(fixed.loss_curve) >= bound - 1e-9
        assert fixed.loss_curve[-1] <= bound + 0.3

        learned = train(EmbeddingNet.create([16, 64, 16], seed=4), data,
                        TrainConfig(loss=LossConfig(scale=1.0, learn_scale=True), **base))
        logger.info(f"learned s={learned.scale:.3f}, accuracy {learned.final_accuracy:.4f}")
        assert learned.final_accuracy >= 0.99


@pytest.mark.training
class TestSnapshots:
    """Snapshot blobs."""

    def test_round_trip(self, out_dir):
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.BASELINE_SOFTMAX, use_bias=True), lr=0.01, iterations=10,
                          batch_size=16, snapshot_every=5, snapshot_count=1, seed=0)
        report = train(EmbeddingNet.create([2, 6, 5, 2], seed=0), ring_blobs(3, 10, 0.2, seed=0), cfg)
        snapshot = report.snapshots[-1]
        loaded = load_snapshot(str(save_snapshot(snapshot, str(out_dir / "snapshot.bin"))))
        assert loaded.iteration == snapshot.iteration
        assert loaded.scale == snapshot.scale
        assert all(np.array_equal(a, b) for a, b in zip(loaded.weights, snapshot.weights))
        assert all(np.array_equal(a, b) for a, b in zip(loaded.biases, snapshot.biases))
        assert np.array_equal(loaded.agents.w, snapshot.agents.w)
        assert np.array_equal(loaded.class_bias, snapshot.class_bias)
        x = np.ones((2, 2))
        assert np.array_equal(EmbeddingNet.from_snapshot(loaded).forward(x)[0], report.net.forward(x)[0])


@pytest.mark.training
class TestFeatureExports:
    """Scatter and loss-curve exports plus the geometry statistics."""

    def test_empty_dataset_writes_header(self, out_dir):
        empty = Dataset(np.empty((0, 2)), np.empty(0), DataSource.SYNTHETIC_BLOBS)
        path = export_feature_scatter(EmbeddingNet.create([2, 4, 2], seed=0), empty, str(out_dir / "scatter.csv"))
        assert path.read_text().splitlines() == ["feature_x,feature_y,label"]

    def test_scatter_rows(self, out_dir):
        data = ring_blobs(3, 4, 0.1, seed=0)
        path = export_feature_scatter(EmbeddingNet.create([2, 4, 2], seed=0), data, str(out_dir / "scatter.csv"))
        rows = data_parser.read_csv(str(path))
        assert len(rows) == 12
        assert sorted({row["label"] for row in rows}) == ["0", "1", "2"]

    def test_scatter_needs_two_dimensions(self, out_dir):
        with pytest.raises(DimensionError):
            export_feature_scatter(EmbeddingNet.create([2, 4, 3], seed=0), ring_blobs(3, 2, 0.1, seed=0),
                                   str(out_dir / "scatter.csv"))

    def test_loss_curve_export(self, out_dir):
        cfg = TrainConfig(lr=0.01, iterations=5, batch_size=8, seed=0)
        report = train(EmbeddingNet.create([2, 4, 2], seed=0), ring_blobs(3, 4, 0.1, seed=0), cfg)
        rows = data_parser.read_csv(str(export_loss_curve(report, str(out_dir / "loss_curve.csv"))))
        assert [row["iteration"] for row in rows] == ["1", "2", "3", "4", "5"]

    def test_radialness_of_rays(self):
        labels = np.repeat([0, 1], 5)
        radii = np.linspace(0.5, 5.0, 5)
        features = np.vstack([np.outer(radii, [1.0, 0.0]), np.outer(radii, [0.0, 1.0])])
        assert radialness(features, labels) == pytest.approx(1.0, abs=1e-9)

    def test_near_origin_detector(self):
        features = np.array([[5.0, 0.0], [4.0, 1.0], [0.0, 5.0], [1.0, 4.0], [0.1, 0.0], [0.0, 0.1]])
        assert near_origin_classes(features, np.array([0, 0, 1, 1, 2, 2])) == [2]


@pytest.mark.training
@pytest.mark.slow
@pytest.mark.acceptance
class TestRadialDistribution:
    """Softmax features spread radially; a bias term can park a class at the origin."""

    @pytest.mark.timeout(300)
    def test_no_bias_features_are_radial(self):
        data = make_blobs(10, 50, 16, 0.2, seed=11, radius=3.0)
        cfg = TrainConfig(loss=LossConfig(kind=LossKind.BASELINE_SOFTMAX), lr=0.01, iterations=3000, seed=11)
        report = train(EmbeddingNet.create([16, 64, 64, 2], seed=11), data, cfg)
        features, _ = report.net.forward(data.samples)
        statistic = radialness(features, data.labels)
        logger.info(f"radialness {statistic:.4f}")
        assert statistic >= 0.9

    @pytest.mark.timeout(300)
    def test_bias_parks_a_class_near_origin(self):
        flagged = []
        for seed in range(5):
            data = make_blobs(10, 50, 16, 0.2, seed=seed, radius=3.0)
            cfg = TrainConfig(loss=LossConfig(kind=LossKind.BASELINE_SOFTMAX, use_bias=True), lr=0.01,
                              iterations=3000, seed=seed)
            report = train(EmbeddingNet.create([16, 64, 64, 2], seed=seed), data, cfg)
            features, _ = report.net.forward(data.samples)
            classes = near_origin_classes(features, data.labels)
            logger.info(f"seed {seed}: near-origin classes {classes}")
            flagged.append(bool(classes))
        assert any(flagged)
