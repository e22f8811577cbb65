"""
Optional MLflow tracking of experiment results.

One parent run per experiment with configuration parameters, one nested run
per (sweep value, method) cell carrying its aggregate metrics, and the tidy
and aggregate CSVs attached as artifacts.
"""

from typing import Optional, Sequence

import mlflow

from conformal_clustering_package.config.settings import get_settings
from conformal_clustering_package.utils.logger import get_logger

from .experiment import ExperimentResult

logger = get_logger("tracking")


def setup_mlflow(experiment_name: str, tracking_uri: Optional[str] = None):
    """Point MLflow at the tracking server and select (or create) the experiment."""
    if tracking_uri:
        mlflow.set_tracking_uri(tracking_uri)
        logger.info("Set MLflow tracking URI", {"uri": tracking_uri})
    mlflow.set_experiment(experiment_name)


def log_experiment_to_mlflow(
    result: ExperimentResult,
    config_hash: Optional[str] = None,
    artifact_paths: Sequence[str] = (),
    experiment_name: Optional[str] = None,
    tracking_uri: Optional[str] = None,
) -> str:
    """
    Log an experiment to MLflow.

    Args:
        result: Finished experiment
        config_hash: Hash of the experiment configuration, stored as a tag
        artifact_paths: Files to attach (typically the tidy and aggregate CSVs)
        experiment_name: MLflow experiment; settings default when None
        tracking_uri: Tracking server; settings default when None

    Returns:
        Run id of the parent run
    """
    settings = get_settings()
    setup_mlflow(
        experiment_name or settings.get_nested("mlflow.experiment_name"),
        tracking_uri or settings.get_nested("mlflow.tracking_uri"),
    )
    cfg = result.config
    with mlflow.start_run(run_name=cfg.name) as parent_run:
        mlflow.log_params({
            "alpha": cfg.alpha,
            "reps": cfg.reps,
            "seed": cfg.seed,
            "sweep_parameter": cfg.sweep.parameter.value,
            "sweep_values": ",".join(str(v) for v in cfg.sweep.values),
            "methods": ",".join(m.value for m in cfg.methods),
            "clusterer_kind": cfg.clusterer.kind.value,
            "classifier_kind": cfg.classifier.kind.value,
            "test_size": cfg.test_size,
        })
        mlflow.set_tags({"config_hash": config_hash or "none", "any_invalid": str(result.any_invalid)})

        for row in result.aggregate.itertuples(index=False):
            with mlflow.start_run(run_name=f"{row.method}@{row.sweep_value:g}", nested=True):
                mlflow.log_params({"method": row.method, "sweep_value": row.sweep_value})
                mlflow.log_metrics({
                    "coverage_mean": row.coverage_mean,
                    "set_size_mean": row.set_size_mean,
                    "n_failed": row.n_failed,
                })
                mlflow.set_tag("valid", str(row.valid))

        for path in artifact_paths:
            mlflow.log_artifact(path)
        run_id = parent_run.info.run_id

    logger.info("Experiment logged to MLflow", {"run_id": run_id, "name": cfg.name})
    return run_id
