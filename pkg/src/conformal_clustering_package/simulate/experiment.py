"""
Monte Carlo coverage experiments.

For every sweep value and replication a pool of n observations and an
independent labeled test sample are drawn, each requested method is fitted
on the pool and evaluated on the test sample. Cells are independent given
their derived seeds, so they may run in worker processes; records are
assembled in (sweep index, rep, method) order whatever the completion order.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from conformal_clustering_package.config.constants import (
    ClassifierKind,
    ClustererKind,
    ConformalDefaults,
    Method,
    PipelineMode,
    SweepParameter,
)
from conformal_clustering_package.config.specs import ClassifierSpec, ClustererSpec
from conformal_clustering_package.conformal.pipeline import (
    ConformalPipeline,
    fit_conformal_pipeline,
    fit_cutoff_predictor,
    fit_split_conformal_classifier,
)
from conformal_clustering_package.core.types import RandomSeed
from conformal_clustering_package.evaluation.coverage import evaluate_coverage
from conformal_clustering_package.utils.error_handler import ConformalClusteringError
from conformal_clustering_package.utils.logger import get_logger
from conformal_clustering_package.utils.metrics import get_metrics_collector
from conformal_clustering_package.utils.result_saver import save_frame

from .generators import GeneratorConfig, GeneratorSource, generate_mixture_data

logger = get_logger("experiment")


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    parameter: SweepParameter = Field(description="Swept quantity: sample size, common variance or FCM exponent")
    values: List[float] = Field(min_length=1)


class ExperimentConfig(GeneratorSource):
    """One coverage experiment: generator, sweep, methods and replication plan."""

    name: str = Field(default="experiment")
    n: int = Field(default=1000, ge=2, description="Pool size when n is not swept")
    sweep: SweepConfig
    alpha: float = Field(default=ConformalDefaults.ALPHA.value, gt=0, lt=1)
    methods: List[Method] = Field(default_factory=lambda: [Method.STOCHASTIC], min_length=1)
    reps: int = Field(default=1, ge=1)
    seed: int = Field(ge=0, lt=2 ** 64)
    test_size: int = Field(default=ConformalDefaults.TEST_SIZE.value, ge=1)
    train_fraction: float = Field(default=ConformalDefaults.TRAIN_FRACTION.value, gt=0, lt=1)
    clusterer: ClustererSpec = Field(default_factory=ClustererSpec)
    classifier: ClassifierSpec = Field(default_factory=ClassifierSpec)
    max_workers: Optional[int] = Field(default=None, ge=1, description="Worker processes; settings default when None")
    track_mlflow: bool = Field(default=False)

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, methods: List[Method]) -> List[Method]:
        if len(set(methods)) != len(methods):
            raise ValueError("methods must not repeat")
        return methods

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if self.sweep.parameter == SweepParameter.N:
            if any(v != int(v) or v < 2 for v in self.sweep.values):
                raise ValueError("sweep.values: sample sizes must be integers >= 2")
        if self.sweep.parameter == SweepParameter.SIGMA2 and any(v <= 0 for v in self.sweep.values):
            raise ValueError("sweep.values: variances must be positive")
        if self.sweep.parameter == SweepParameter.FUZZINESS:
            if self.clusterer.kind != ClustererKind.FCM:
                raise ValueError("sweep.parameter: fuzziness sweeps need clusterer.kind='fcm'")
            if any(v <= 1 for v in self.sweep.values):
                raise ValueError("sweep.values: fuzziness must exceed 1")
        if Method.ORACLE_LABELS in self.methods and self.classifier.kind == ClassifierKind.CLUSTERER_BYPASS:
            raise ValueError("methods: 'oracle-labels' needs a trainable classifier")
        return self

    def cell(self, sweep_index: int) -> Tuple[GeneratorConfig, int, ClustererSpec]:
        """Generator, pool size and clusterer spec at one sweep value."""
        value = self.sweep.values[sweep_index]
        generator, n, clusterer = self.resolved_generator(), self.n, self.clusterer
        if self.sweep.parameter == SweepParameter.N:
            n = int(value)
        elif self.sweep.parameter == SweepParameter.SIGMA2:
            generator = generator.with_sigma2(value)
        else:
            clusterer = clusterer.model_copy(update={"fuzziness": float(value)})
        return generator, n, clusterer


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: pd.DataFrame
    aggregate: pd.DataFrame

    @property
    def any_invalid(self) -> bool:
        return bool((~self.aggregate["valid"]).any())

    def save(self, tidy_path: str, aggregate_path: str, config_hash: Optional[str] = None) -> Tuple[str, str]:
        return save_frame(self.records, tidy_path, config_hash), save_frame(self.aggregate, aggregate_path, config_hash)


def _fit_method(method: Method, cfg: ExperimentConfig, generator: GeneratorConfig, clusterer: ClustererSpec, pool, seed):
    K = generator.K
    X, Y = pool
    if method == Method.CUTOFF:
        return fit_cutoff_predictor(X, K, cfg.alpha, clusterer, seed, oracle=generator)
    if method == Method.ORACLE_LABELS:
        return fit_split_conformal_classifier(X, Y, K, cfg.alpha, cfg.classifier, seed, cfg.train_fraction)
    return fit_conformal_pipeline(
        X,
        K,
        cfg.alpha,
        clusterer,
        cfg.classifier,
        PipelineMode(method.value),
        seed,
        train_fraction=cfg.train_fraction,
        oracle=generator,
    )


def run_cell(cfg: ExperimentConfig, sweep_index: int, rep: int) -> List[Dict[str, Any]]:
    """All method records of one (sweep value, replication) cell."""
    generator, n, clusterer = cfg.cell(sweep_index)
    cell_seed = RandomSeed(cfg.seed).derive("cell", sweep_index, rep)
    pool = generate_mixture_data(generator, n, cell_seed.derive("pool"))
    X_test, Y_test = generate_mixture_data(generator, cfg.test_size, cell_seed.derive("test"))

    records = []
    for method in cfg.methods:
        record = {
            "sweep_parameter": cfg.sweep.parameter.value,
            "sweep_value": cfg.sweep.values[sweep_index],
            "sweep_index": sweep_index,
            "method": method.value,
            "rep": rep,
            "n": n,
            "coverage": np.nan,
            "mean_set_size": np.nan,
            "threshold": np.nan,
            "failed": False,
            "error": "",
        }
        try:
            predictor = _fit_method(method, cfg, generator, clusterer, pool, cell_seed.derive("fit"))
            report = evaluate_coverage(predictor, X_test, Y_test)
            record["coverage"] = report.coverage
            record["mean_set_size"] = report.mean_set_size
            if isinstance(predictor, ConformalPipeline):
                record["threshold"] = predictor.threshold
        except ConformalClusteringError as e:
            record["failed"] = True
            record["error"] = f"{type(e).__name__}: {e.message}"
            logger.warning(
                "Experiment cell failed",
                {"sweep_index": sweep_index, "rep": rep, "method": method.value, "error": record["error"]},
            )
        records.append(record)
    return records


def _run_cell_in_worker(args: Tuple[ExperimentConfig, int, int]) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    """Worker entry point; ships the cell's stage metrics back with its records."""
    metrics = get_metrics_collector()
    metrics.reset()
    return run_cell(*args), metrics.snapshot()


def _standard_error(values: pd.Series) -> float:
    values = values.dropna()
    return float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else float("nan")


def aggregate_records(records: pd.DataFrame, reps: int) -> pd.DataFrame:
    """Mean and standard error per (sweep value, method); invalid when > 20% of reps failed."""
    rows = []
    for (sweep_index, method), group in records.groupby(["sweep_index", "method"], sort=False):
        n_failed = int(group["failed"].sum())
        rows.append({
            "sweep_parameter": group["sweep_parameter"].iloc[0],
            "sweep_value": group["sweep_value"].iloc[0],
            "sweep_index": sweep_index,
            "method": method,
            "reps": reps,
            "n_failed": n_failed,
            "coverage_mean": float(group["coverage"].mean()),
            "coverage_se": _standard_error(group["coverage"]),
            "set_size_mean": float(group["mean_set_size"].mean()),
            "set_size_se": _standard_error(group["mean_set_size"]),
            "valid": n_failed <= ConformalDefaults.MAX_FAILURE_RATE.value * reps,
        })
    return pd.DataFrame(rows)


def run_experiment(cfg: ExperimentConfig, max_workers: int = 1) -> ExperimentResult:
    """
    Run every (sweep value, replication) cell and aggregate.

    Args:
        cfg: Validated experiment configuration
        max_workers: Worker processes; 1 runs in-process

    Returns:
        ExperimentResult with one tidy record per (sweep value, method, rep)
    """
    metrics = get_metrics_collector()
    metrics.start_stage("experiment", {"name": cfg.name})
    tasks = [(cfg, i, rep) for i in range(len(cfg.sweep.values)) for rep in range(cfg.reps)]
    logger.info("Running experiment", {"name": cfg.name, "cells": len(tasks), "max_workers": max_workers})

    if max_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            chunks = []
            for chunk, snapshot in executor.map(_run_cell_in_worker, tasks):
                metrics.merge(snapshot)
                chunks.append(chunk)
    else:
        chunks = [run_cell(*task) for task in tasks]

    records = pd.DataFrame([record for chunk in chunks for record in chunk])
    aggregate = aggregate_records(records, cfg.reps)
    metrics.end_stage("experiment", success=True, items_processed=len(records))
    failed = int(records["failed"].sum())
    if failed:
        metrics.increment("failed_replications", failed)
    logger.info("Experiment finished", {"name": cfg.name, "records": len(records), "failed": failed})
    return ExperimentResult(config=cfg, records=records, aggregate=aggregate)
