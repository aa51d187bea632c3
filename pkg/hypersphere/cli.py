"""
Command-line front door: wires run configs to the trainer, the theory checks
and the evaluation harness, and writes every CSV artifact under --out.
"""
import argparse
import os
from typing import List, Optional

import numpy as np

from config.settings import config
from hypersphere.evaluation import (
    ScoreKind,
    evaluate_video_pairs,
    kfold_accuracy,
    load_pair_set,
    make_video_score_pairs,
    tpr_at_far,
)
from hypersphere.exceptions import CheckFailedError, FormatError, HypersphereError
from hypersphere.experiments import loss_weight_sweep
from hypersphere.gradcheck import ALL_CHECKS, run_gradient_suite
from hypersphere.losses import ComboTerm
from hypersphere.run_config import Command, RunConfig, load_run_config
from hypersphere.theory import BOUND_CURVE_CLASS_COUNTS, bound_curve, loss_lower_bound, run_all_checks
from hypersphere.trainer import (
    EmbeddingNet,
    export_feature_scatter,
    export_loss_curve,
    near_origin_classes,
    radialness,
    save_snapshot,
    train,
)
from utils.config_parser import ConfigError
from utils.data_parser import data_parser
from utils.logger import logger

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_INPUT = 2
EXIT_CHECK_FAILED = 3

LOSS_CURVE_FILE = "loss_curve.csv"
SCATTER_FILE = "scatter.csv"
BOUND_CURVE_FILE = "bound_curve.csv"
FOLD_RESULTS_FILE = "fold_results.csv"
FAR_TPR_FILE = "far_tpr.csv"
VIDEO_RESULTS_FILE = "video_results.csv"
SWEEP_FILE = "loss_weight_sweep.csv"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypersphere",
        description="Train and evaluate L2-normalized embeddings and check the loss-geometry results.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add_common(sub, needs_config: bool):
        sub.add_argument("--config", required=needs_config, help="INI run configuration file")
        sub.add_argument("--seed", type=int, default=None, help="seed overriding [run] seed")
        sub.add_argument("--out", default=None, help=f"output directory (default {config.OUTPUT_DIR})")

    add_common(commands.add_parser(Command.TRAIN.value, help="train an embedding network"), True)
    add_common(commands.add_parser(Command.SCATTER.value, help="train a 2-D embedding and export its features"), True)

    bounds = commands.add_parser(Command.BOUNDS.value, help="normalized softmax loss lower bound")
    bounds.add_argument("--n", type=int, required=True, help="number of classes")
    bounds.add_argument("--ell-sq", type=float, required=True, help="squared feature/weight norm (the scale s)")
    bounds.add_argument("--out", default=None, help="output directory for the bound curve")

    gradcheck = commands.add_parser(Command.GRADCHECK.value, help="finite-difference gradient checks")
    gradcheck.add_argument("--loss", default="all", choices=["all"] + ALL_CHECKS, help="check to run")
    gradcheck.add_argument("--trials", type=int, default=100, help="random instances per check")
    gradcheck.add_argument("--seed", type=int, default=0, help="seed of the random instances")

    pairs = commands.add_parser(Command.EVAL_PAIRS.value, help="k-fold pair verification accuracy and TPR@FAR")
    pairs.add_argument("--pairs", required=True, help="pair list file (id_a id_b label)")
    pairs.add_argument("--features", required=True, action="append",
                       help="feature store blob; repeat once per snapshot to average")
    pairs.add_argument("--config", default=None, help="INI run configuration; its [eval] section fills unset flags")
    pairs.add_argument("--folds", type=int, default=None, help=f"number of folds (default {config.KFOLD_SPLITS})")
    pairs.add_argument("--far", type=float, action="append", default=None,
                       help="false-accept rate for TPR@FAR; repeatable")
    pairs.add_argument("--pca", action="store_true", default=None, help="fit PCA on the training folds before scoring")
    pairs.add_argument("--pca-keep", type=int, default=None, help="PCA components kept (default: all)")
    pairs.add_argument("--metric", choices=[kind.value for kind in ScoreKind], default=None,
                       help="pair score (default cosine)")
    pairs.add_argument("--out", default=None, help=f"output directory (default {config.OUTPUT_DIR})")

    add_common(commands.add_parser(Command.EVAL_VIDEO.value,
                                   help="HIK-SVM against mean-score thresholding on synthetic video pairs"), False)

    prop = commands.add_parser(Command.PROP_CHECK.value, help="run every numeric property check")
    prop.add_argument("--trials", type=int, default=1000, help="random instances per check")
    prop.add_argument("--seed", type=int, default=0, help="seed of the random instances")

    add_common(commands.add_parser(Command.SWEEP.value,
                                   help="pair accuracy of softmax plus a weighted C-contrastive or center term"), True)
    return parser


# ===========================================
# COMMANDS
# ===========================================

def _train_from_config(run_config: RunConfig):
    data = run_config.dataset()
    train_config = run_config.train_config()
    net = EmbeddingNet.create(run_config.layer_sizes(data.input_dim), run_config.seed)
    return data, train(net, data, train_config)


def cmd_train(args) -> int:
    run_config = load_run_config(Command.TRAIN, args.config, args.seed, args.out)
    _, report = _train_from_config(run_config)
    export_loss_curve(report, os.path.join(run_config.out_dir, LOSS_CURVE_FILE))
    for snapshot in report.snapshots:
        save_snapshot(snapshot, os.path.join(run_config.out_dir, f"snapshot_{snapshot.iteration:06d}.bin"))
    print(f"final accuracy: {report.final_accuracy:.4f}")
    print(f"final loss: {report.loss_curve[-1]:.6f}" if report.loss_curve else "final loss: n/a")
    print(f"distortion bound (moving average): {report.distortion:.6f}")
    return EXIT_OK


def cmd_scatter(args) -> int:
    run_config = load_run_config(Command.SCATTER, args.config, args.seed, args.out)
    data, report = _train_from_config(run_config)
    export_feature_scatter(report.net, data, os.path.join(run_config.out_dir, SCATTER_FILE))
    export_loss_curve(report, os.path.join(run_config.out_dir, LOSS_CURVE_FILE))
    features, _ = report.net.forward(data.samples)
    near_origin = near_origin_classes(features, data.labels)
    print(f"radialness: {radialness(features, data.labels):.4f}")
    print(f"near-origin classes: {near_origin if near_origin else 'none'}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    bound = loss_lower_bound(args.n, args.ell_sq)
    print(f"loss lower bound (n={args.n}, ell_sq={args.ell_sq}): {bound:.2f} [{bound:.6f}]")
    out_dir = args.out or config.OUTPUT_DIR
    class_counts = sorted(set(BOUND_CURVE_CLASS_COUNTS) | {args.n})
    rows = [{"ell_sq": point.ell_sq, "n": point.n, "bound": point.bound} for point in bound_curve(class_counts)]
    data_parser.write_csv(rows, os.path.join(out_dir, BOUND_CURVE_FILE), fieldnames=["ell_sq", "n", "bound"])
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    names = None if args.loss == "all" else [args.loss]
    results = run_gradient_suite(names, trials=args.trials, seed=args.seed)
    failed = [result for result in results if not result.passed]
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: worst relative error "
              f"{result.worst_error:.2e}, {result.failures}/{result.trials} failures")
    if failed:
        raise CheckFailedError(", ".join(result.name for result in failed), "finite-difference mismatch")
    return EXIT_OK


def cmd_eval_pairs(args) -> int:
    run_config = load_run_config(Command.EVAL_PAIRS, args.config, None, args.out)
    out_dir = run_config.out_dir
    settings = run_config.section("eval")
    folds = args.folds or settings.get("folds", config.KFOLD_SPLITS)
    far_targets = args.far or settings.get("far") or config.FAR_TARGETS
    pca = args.pca if args.pca is not None else settings.get("pca", False)
    pca_keep = args.pca_keep or settings.get("pca_keep")
    kind = ScoreKind(args.metric or settings.get("metric", ScoreKind.COSINE))
    pca_note = f"keep {pca_keep or 'all'}" if pca else "off"
    print(f"folds: {folds}, score: {kind.value}, pca: {pca_note}")
    fold_rows, far_rows, means = [], [], []
    for snapshot, feature_store in enumerate(args.features):
        pair_set = load_pair_set(args.pairs, feature_store, folds)
        result = kfold_accuracy(pair_set, folds, pca, pca_keep, kind)
        means.append(result.mean)
        fold_rows += [{"fold": fold.fold, "threshold": fold.threshold, "accuracy": fold.accuracy,
                       "snapshot": snapshot} for fold in result.folds]
        print(f"[{feature_store}] accuracy {result.mean:.4f} +/- {result.stderr:.4f}")
        scores = pair_set.scores(kind)
        for far in far_targets:
            far_result = tpr_at_far(scores, pair_set.same, far)
            far_rows.append({"far": far, "tpr": far_result.tpr, "threshold": far_result.threshold,
                             "resolvable": far_result.resolvable, "snapshot": snapshot})
            note = "" if far_result.resolvable else f" (unresolvable, minimum FAR {far_result.min_far:.3g})"
            print(f"[{feature_store}] TPR@FAR={far:g}: {far_result.tpr:.4f}{note}")
    if len(means) > 1:
        print(f"snapshot-averaged accuracy: {np.mean(means):.4f}")
    data_parser.write_csv(fold_rows, os.path.join(out_dir, FOLD_RESULTS_FILE),
                          fieldnames=["fold", "threshold", "accuracy", "snapshot"])
    data_parser.write_csv(far_rows, os.path.join(out_dir, FAR_TPR_FILE),
                          fieldnames=["far", "tpr", "threshold", "resolvable", "snapshot"])
    return EXIT_OK


def cmd_eval_video(args) -> int:
    run_config = load_run_config(Command.EVAL_VIDEO, args.config, args.seed, args.out)
    video = run_config.section("video")
    folds = run_config.section("eval").get("folds", config.KFOLD_SPLITS)
    ignored = sorted(set(run_config.section("eval")) - {"folds"})
    if ignored:
        logger.warning(f"eval-video ignores [eval] keys: {', '.join(ignored)}")
        print(f"note: [eval] {', '.join(ignored)} not used by eval-video")
    seeds = [run_config.seed] if args.seed is not None else video.get("seeds", [run_config.seed])
    rows = []
    for seed in seeds:
        pairs = make_video_score_pairs(video.get("n_pairs", 500), seed, **run_config.video_generator_options())
        result = evaluate_video_pairs(pairs, folds, video.get("svm_c", config.SVM_C),
                                      video.get("bins", config.HISTOGRAM_BINS))
        rows.append({"seed": seed, "hik_accuracy": result.hik_accuracy,
                     "mean_score_accuracy": result.mean_score_accuracy})
        print(f"seed {seed}: HIK-SVM {result.hik_accuracy:.4f}, mean score {result.mean_score_accuracy:.4f}")
    margin = np.mean([row["hik_accuracy"] - row["mean_score_accuracy"] for row in rows])
    print(f"mean margin: {100 * margin:.2f} points")
    data_parser.write_csv(rows, os.path.join(run_config.out_dir, VIDEO_RESULTS_FILE),
                          fieldnames=["seed", "hik_accuracy", "mean_score_accuracy"])
    return EXIT_OK


def cmd_prop_check(args) -> int:
    outcomes = run_all_checks(trials=args.trials, seed=args.seed)
    for outcome in outcomes:
        print(f"{'PASS' if outcome.passed else 'FAIL'} {outcome.name}: {outcome.detail}")
    failed = [outcome.name for outcome in outcomes if not outcome.passed]
    if failed:
        raise CheckFailedError(", ".join(failed))
    return EXIT_OK


def cmd_sweep(args) -> int:
    run_config = load_run_config(Command.SWEEP, args.config, args.seed, args.out)
    sweep = run_config.section("sweep")
    settings = run_config.section("eval")
    data = run_config.dataset()
    points = loss_weight_sweep(
        data,
        run_config.layer_sizes(data.input_dim),
        run_config.train_config(),
        sweep.get("weights", config.SWEEP_WEIGHTS),
        sweep.get("terms", list(ComboTerm)),
        n_pairs=sweep.get("n_pairs", config.SWEEP_PAIRS),
        k=settings.get("folds", config.KFOLD_SPLITS),
        kind=settings.get("metric", ScoreKind.COSINE),
    )
    rows = []
    for point in points:
        rows.append({"combo_with": point.combo_with.value, "weight": point.weight,
                     "pair_accuracy": point.pair_accuracy, "train_accuracy": point.train_accuracy})
        print(f"softmax + {point.weight:g} * {point.combo_with.value}: pair accuracy {point.pair_accuracy:.4f}")
    data_parser.write_csv(rows, os.path.join(run_config.out_dir, SWEEP_FILE),
                          fieldnames=["combo_with", "weight", "pair_accuracy", "train_accuracy"])
    return EXIT_OK


HANDLERS = {
    Command.TRAIN.value: cmd_train,
    Command.SCATTER.value: cmd_scatter,
    Command.BOUNDS.value: cmd_bounds,
    Command.GRADCHECK.value: cmd_gradcheck,
    Command.EVAL_PAIRS.value: cmd_eval_pairs,
    Command.EVAL_VIDEO.value: cmd_eval_video,
    Command.PROP_CHECK.value: cmd_prop_check,
    Command.SWEEP.value: cmd_sweep,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    try:
        return HANDLERS[args.command](args)
    except (ConfigError, FileNotFoundError, FormatError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}")
        return EXIT_BAD_INPUT
    except CheckFailedError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}")
        return EXIT_CHECK_FAILED
    except HypersphereError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}")
        return EXIT_ERROR
    except ValueError as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}")
        return EXIT_BAD_INPUT
