#!/usr/bin/env python3
"""
Command-line entry point for conformal clustering.

Subcommands:
    simulate      draw a labeled sample from a known mixture
    fit           fit a split conformal clustering pipeline on a data CSV
    predict-sets  confidence sets of a fitted pipeline at the rows of a data CSV
    heatmap       set sizes over a regular 2-D grid (plot-ready CSV)
    diagnostics   estimation error, stability bound and coverage bound
    experiment    Monte Carlo coverage sweep

Each command reads an optional JSON config (--config) and applies flag
overrides on top before validation. Exit codes: 0 success, 2 I/O error,
3 configuration error, 4 fit / numeric error.
"""

import argparse
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

import numpy as np
import pandas as pd
from pydantic import BaseModel

from conformal_clustering_package.config.config_validator import (
    ConfigurationError,
    config_hash,
    load_json_config,
    validate_model,
)
from conformal_clustering_package.config.constants import ExitCode, PipelineMode
from conformal_clustering_package.config.run_config import (
    DiagnosticsRunConfig,
    ExperimentRunConfig,
    FitRunConfig,
    HeatmapRunConfig,
    PredictSetsRunConfig,
    SimulateRunConfig,
)
from conformal_clustering_package.config.settings import get_settings
from conformal_clustering_package.conformal.pipeline import (
    fit_conformal_pipeline,
    load_pipeline,
    predict_sets,
    save_pipeline,
)
from conformal_clustering_package.conformal.scores import sets_from_membership
from conformal_clustering_package.core.data_io import read_dataset_csv, write_dataset_csv, write_labeling_csv
from conformal_clustering_package.core.types import RandomSeed
from conformal_clustering_package.evaluation.diagnostics import reports_to_frame, run_diagnostics_sweep
from conformal_clustering_package.simulate.experiment import run_experiment
from conformal_clustering_package.simulate.generators import PRESETS, generate_mixture_data
from conformal_clustering_package.utils.error_handler import (
    ConformalClusteringError,
    DataIOError,
    PipelineStageError,
)
from conformal_clustering_package.utils.logger import LogLevel, configure_logging, get_logger
from conformal_clustering_package.utils.metrics import get_metrics_collector
from conformal_clustering_package.utils.result_saver import dumps_json, save_frame, save_json


class CliArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors surface as configuration errors (exit 3)."""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _format_float(value: float) -> str:
    return "inf" if np.isposinf(value) else f"{value:.17g}"


def build_config(model_cls: Type[BaseModel], args: argparse.Namespace, overrides: Dict[str, Any]) -> Tuple[Any, str]:
    """
    Merge the JSON config file with flag overrides and validate.

    Args:
        model_cls: Run configuration model of the command
        args: Parsed arguments (``args.config`` may be None)
        overrides: Field values from flags; None means "not given"

    Returns:
        (validated config, config hash)
    """
    payload = load_json_config(args.config) if args.config else {}
    for key, value in overrides.items():
        if value is not None:
            payload[key] = value
    config = validate_model(model_cls, payload)
    return config, config_hash(config)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg, digest = build_config(SimulateRunConfig, args, {
        "preset": args.preset,
        "sigma2": args.sigma2,
        "n": args.n,
        "seed": args.seed,
        "features_out": args.features_out,
        "labels_out": args.labels_out,
    })
    generator = cfg.resolved_generator()
    X, Y = generate_mixture_data(generator, cfg.n, RandomSeed(cfg.seed))
    write_dataset_csv(X, cfg.features_out, digest)
    write_labeling_csv(Y, cfg.labels_out, digest)
    print(dumps_json({"generator": generator.model_dump(mode="json"), "n": cfg.n, "seed": cfg.seed}), end="")
    return ExitCode.SUCCESS


def cmd_fit(args: argparse.Namespace) -> int:
    cfg, digest = build_config(FitRunConfig, args, {
        "data": args.data,
        "K": args.K,
        "alpha": args.alpha,
        "mode": args.mode,
        "seed": args.seed,
        "output": args.output,
    })
    X = read_dataset_csv(cfg.data)
    pipeline = fit_conformal_pipeline(
        X,
        cfg.K,
        cfg.alpha,
        cfg.clusterer,
        cfg.classifier,
        cfg.mode,
        RandomSeed(cfg.seed),
        train_fraction=cfg.train_fraction,
        bypass_classifier=cfg.bypass_classifier,
    )
    save_pipeline(pipeline, cfg.output, digest)
    print(f"threshold: {_format_float(pipeline.threshold)}")
    print(f"alignment: {' '.join(str(j) for j in pipeline.alignment.to_one_based())}")
    print(f"split: n_train={pipeline.n_train} n_calib={pipeline.n_calib}")
    summary = pipeline.calibration_summary
    print("calibration scores: " + " ".join(f"{k}={_format_float(summary[k])}" for k in ("min", "q1", "median", "q3", "max")))
    return ExitCode.SUCCESS


def _sets_frame(membership: np.ndarray) -> pd.DataFrame:
    sets = sets_from_membership(membership)
    return pd.DataFrame({
        "set_size": [s.size for s in sets],
        "members": [s.format_members() for s in sets],
    })


def cmd_predict_sets(args: argparse.Namespace) -> int:
    cfg, digest = build_config(PredictSetsRunConfig, args, {
        "pipeline": args.pipeline,
        "data": args.data,
        "output": args.output,
    })
    pipeline = load_pipeline(cfg.pipeline)
    X = read_dataset_csv(cfg.data)
    if X.p != pipeline.p:
        raise ConfigurationError(f"Data has {X.p} feature columns but the pipeline expects {pipeline.p}")
    sets = predict_sets(pipeline, X)
    frame = pd.DataFrame({
        "row_id": np.arange(1, X.n + 1),
        "set_size": [s.size for s in sets],
        "members": [s.format_members() for s in sets],
    })
    save_frame(frame, cfg.output, digest)
    print(f"sets: {X.n} mean_size={_format_float(float(frame['set_size'].mean()))}")
    return ExitCode.SUCCESS


def cmd_heatmap(args: argparse.Namespace) -> int:
    cfg, digest = build_config(HeatmapRunConfig, args, {
        "pipeline": args.pipeline,
        "resolution": args.resolution,
        "output": args.output,
    })
    pipeline = load_pipeline(cfg.pipeline)
    if pipeline.p != 2:
        raise ConfigurationError(f"Heatmaps need a pipeline fitted on p=2 features, got p={pipeline.p}")
    x1 = np.linspace(cfg.x1_min, cfg.x1_max, cfg.resolution)
    x2 = np.linspace(cfg.x2_min, cfg.x2_max, cfg.resolution)
    grid1, grid2 = np.meshgrid(x1, x2)
    points = np.column_stack([grid1.ravel(), grid2.ravel()])
    frame = pd.concat(
        [pd.DataFrame({"x1": points[:, 0], "x2": points[:, 1]}), _sets_frame(pipeline.predict_membership(points))],
        axis=1,
    )
    save_frame(frame, cfg.output, digest)
    print(f"grid: {cfg.resolution}x{cfg.resolution} cells={len(frame)}")
    return ExitCode.SUCCESS


def cmd_diagnostics(args: argparse.Namespace) -> int:
    cfg, digest = build_config(DiagnosticsRunConfig, args, {
        "preset": args.preset,
        "sigma2": args.sigma2,
        "reps": args.reps,
        "alpha": args.alpha,
        "seed": args.seed,
        "output": args.output,
    })
    output = cfg.output_path(get_settings().get_nested("output.base_dir", "."))
    generator = cfg.resolved_generator()
    reports = run_diagnostics_sweep(cfg.clusterer, generator, cfg.n_grid, cfg.reps, cfg.alpha, RandomSeed(cfg.seed))
    save_json({
        "generator": generator.model_dump(mode="json"),
        "clusterer": cfg.clusterer.model_dump(mode="json"),
        "alpha": cfg.alpha,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "reports": [report.to_dict() for report in reports],
    }, output, digest)
    if cfg.table_output:
        save_frame(reports_to_frame(reports), cfg.table_output, digest)
    print(f"config_hash: {digest}")
    for report in reports:
        print(
            f"n={report.n} E_hat={_format_float(report.E_hat)} S_hat_upper={_format_float(report.S_hat_upper)} "
            f"bound_rhs={_format_float(report.bound_rhs)}"
        )
    return ExitCode.SUCCESS


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg, digest = build_config(ExperimentRunConfig, args, {
        "reps": args.reps,
        "seed": args.seed,
        "max_workers": args.max_workers,
        "tidy_output": args.tidy_output,
        "aggregate_output": args.aggregate_output,
    })
    settings = get_settings()
    metrics = get_metrics_collector()
    metrics.reset()
    metrics.set_run_id(digest[:12])
    max_workers = cfg.max_workers or int(settings.get_nested("processing.max_workers", 1))

    result = run_experiment(cfg, max_workers=max_workers)
    paths = result.save(*cfg.output_paths(settings.get_nested("output.base_dir", ".")), digest)
    if cfg.track_mlflow or settings.is_mlflow_enabled():
        from conformal_clustering_package.simulate.tracking import log_experiment_to_mlflow

        log_experiment_to_mlflow(result, config_hash=digest, artifact_paths=paths, experiment_name=cfg.name)

    columns = ["sweep_value", "method", "coverage_mean", "coverage_se", "set_size_mean", "n_failed", "valid"]
    print(result.aggregate[columns].to_string(index=False))
    metrics.complete_run()
    if args.verbose:
        print(dumps_json(metrics.get_summary()), end="", file=sys.stderr)
    if result.any_invalid:
        get_logger("main").error("Experiment has invalid cells", {"config_hash": digest})
        return ExitCode.FIT_ERROR
    return ExitCode.SUCCESS


def _add_config_flag(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=str, help="JSON run configuration; flags override its values")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog="conformal-clustering",
        description="Split conformal prediction sets for cluster labels with stochastic labels",
    )
    parser.add_argument(
        "--log-level",
        type=str,
        choices=[level.name for level in LogLevel],
        help="Log level on stderr (default: CONFORMAL_LOG_LEVEL or WARNING)",
    )
    parser.add_argument("--log-file", type=str, help="Also append log lines to this file")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Draw a labeled sample from a known mixture")
    _add_config_flag(simulate)
    simulate.add_argument("--preset", type=str, choices=PRESETS)
    simulate.add_argument("--sigma2", type=float)
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--features-out", type=str)
    simulate.add_argument("--labels-out", type=str)
    simulate.add_argument("--seed", type=int, required=True)
    simulate.set_defaults(handler=cmd_simulate)

    fit = subparsers.add_parser("fit", help="Fit a conformal clustering pipeline")
    _add_config_flag(fit)
    fit.add_argument("--data", type=str, help="Features CSV")
    fit.add_argument("--K", type=int, help="Number of clusters")
    fit.add_argument("--alpha", type=float)
    fit.add_argument("--mode", type=str, choices=[PipelineMode.STOCHASTIC.value, PipelineMode.NAIVE_HARD.value])
    fit.add_argument("--output", type=str, help="Pipeline JSON path")
    fit.add_argument("--seed", type=int, required=True)
    fit.set_defaults(handler=cmd_fit)

    sets = subparsers.add_parser("predict-sets", help="Confidence sets at the rows of a data CSV")
    _add_config_flag(sets)
    sets.add_argument("--pipeline", type=str)
    sets.add_argument("--data", type=str)
    sets.add_argument("--output", type=str)
    sets.set_defaults(handler=cmd_predict_sets)

    heatmap = subparsers.add_parser("heatmap", help="Set sizes over a 2-D grid")
    _add_config_flag(heatmap)
    heatmap.add_argument("--pipeline", type=str)
    heatmap.add_argument("--resolution", type=int)
    heatmap.add_argument("--output", type=str)
    heatmap.set_defaults(handler=cmd_heatmap)

    diagnostics = subparsers.add_parser("diagnostics", help="Consistency and stability diagnostics")
    _add_config_flag(diagnostics)
    diagnostics.add_argument("--preset", type=str, choices=PRESETS)
    diagnostics.add_argument("--sigma2", type=float)
    diagnostics.add_argument("--reps", type=int)
    diagnostics.add_argument("--alpha", type=float)
    diagnostics.add_argument("--output", type=str, help="Report JSON path (default: <output dir>/diagnostics.json)")
    diagnostics.add_argument("--seed", type=int, required=True)
    diagnostics.set_defaults(handler=cmd_diagnostics)

    experiment = subparsers.add_parser("experiment", help="Monte Carlo coverage sweep")
    _add_config_flag(experiment)
    experiment.add_argument("--reps", type=int)
    experiment.add_argument("--max-workers", type=int)
    experiment.add_argument("--tidy-output", type=str, help="Tidy CSV path (default: <output dir>/<name>_tidy.csv)")
    experiment.add_argument(
        "--aggregate-output", type=str, help="Aggregate CSV path (default: <output dir>/<name>_aggregate.csv)"
    )
    experiment.add_argument("--seed", type=int, required=True)
    experiment.add_argument("--verbose", action="store_true", help="Print run metrics to stderr")
    experiment.set_defaults(handler=cmd_experiment)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and map failures to exit codes."""
    logger = get_logger("main")
    try:
        args = build_parser().parse_args(argv)
        settings = get_settings()
        configure_logging(
            LogLevel.from_name(args.log_level or settings.get_nested("logging.level"), LogLevel.WARNING),
            args.log_file or settings.get_nested("logging.file"),
        )
        handler: Callable[[argparse.Namespace], int] = args.handler
        return int(handler(args))
    except ConfigurationError as e:
        print(f"configuration error: {e.message}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    except DataIOError as e:
        print(f"I/O error: {e.message}", file=sys.stderr)
        return ExitCode.IO_ERROR
    except PipelineStageError as e:
        logger.error("Pipeline stage failed", {"stage": e.stage}, error=e.message)
        print(f"fit error in stage '{e.stage}': {e.message}", file=sys.stderr)
        return ExitCode.FIT_ERROR
    except ConformalClusteringError as e:
        print(f"fit error: {e.message}", file=sys.stderr)
        return ExitCode.FIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
