"""
Split conformal clustering pipelines.

Stochastic mode:
    split -> soft-cluster the training half and sample labels -> fit the soft
    classifier -> soft-cluster the calibration half independently and sample
    labels -> align cluster labels to the classifier's hard rule -> APS scores
    of the aligned calibration labels -> threshold.
Naive-hard mode takes argmax labels instead of sampling. The oracle-labels
pipeline skips clustering altogether and calibrates on supplied labels.

Every stage draws from its own sub-stream of the root seed, so a fitted
pipeline is a deterministic function of (data, specs, alpha, seed).
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Protocol, Tuple, Union

import numpy as np

from conformal_clustering_package.align.assignment import Permutation, build_confusion_cost, solve_assignment
from conformal_clustering_package.classify.base import ClassifierModel
from conformal_clustering_package.classify.classifier import (
    classifier_from_dict,
    fit_soft_classifier,
    hard_rule_labels,
)
from conformal_clustering_package.clustering.stochastic import (
    FittedClusterer,
    PosteriorModel,
    SoftLabelMatrix,
    fit_soft_clusterer,
    sample_stochastic_labels,
)
from conformal_clustering_package.config.constants import (
    FORMAT_VERSION,
    ClassifierKind,
    ConformalDefaults,
    PipelineMode,
)
from conformal_clustering_package.config.specs import ClassifierSpec, ClustererSpec
from conformal_clustering_package.core.sampling import split_indices
from conformal_clustering_package.core.types import Dataset, Labeling, RandomSeed, SplitIndices
from conformal_clustering_package.utils.error_handler import DataIOError, InvalidArgumentError, handle_stage_error
from conformal_clustering_package.utils.logger import get_logger
from conformal_clustering_package.utils.metrics import get_metrics_collector
from conformal_clustering_package.utils.result_saver import load_json, parse_float, save_json

from .scores import (
    ConfidenceSet,
    aps_scores_at,
    calibration_threshold,
    check_alpha,
    cutoff_membership,
    prediction_membership,
    sets_from_membership,
)

logger = get_logger("conformal_pipeline")

QueryData = Union[Dataset, np.ndarray]


def _features(X: QueryData) -> np.ndarray:
    return X.features if isinstance(X, Dataset) else np.atleast_2d(np.asarray(X, dtype=float))


class SetPredictor(Protocol):
    """Anything that maps query points to confidence-set memberships."""
    K: int

    def predict_membership(self, X: QueryData) -> np.ndarray:
        ...


def summarize_scores(scores: np.ndarray) -> Dict[str, float]:
    quantiles = np.quantile(scores, [0.0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(("min", "q1", "median", "q3", "max"), (float(q) for q in quantiles)))


@dataclass(frozen=True)
class ConformalPipeline:
    """Fitted split conformal predictor for cluster labels."""
    classifier: ClassifierModel
    alignment: Permutation
    threshold: float
    alpha: float
    mode: PipelineMode
    calibration_scores: np.ndarray
    seed: RandomSeed
    clusterer_spec: Optional[ClustererSpec] = None
    classifier_spec: Optional[ClassifierSpec] = None
    n_train: int = 0
    n_calib: int = 0
    calibration_summary: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        check_alpha(self.alpha)
        if not self.threshold >= 0:
            raise InvalidArgumentError(f"Threshold must be >= 0 or +inf, got {self.threshold}")
        if self.alignment.K != self.classifier.K:
            raise InvalidArgumentError("Alignment and classifier disagree on K")
        scores = np.array(self.calibration_scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "calibration_scores", scores)
        object.__setattr__(self, "mode", PipelineMode(self.mode))

    @property
    def K(self) -> int:
        return self.classifier.K

    @property
    def p(self) -> int:
        return self.classifier.p

    def predict_proba(self, X: QueryData) -> np.ndarray:
        return self.classifier.predict_proba_matrix(_features(X))

    def predict_membership(self, X: QueryData) -> np.ndarray:
        return prediction_membership(self.predict_proba(X), self.threshold)

    def recalibrate(self, alpha: float) -> "ConformalPipeline":
        """Same fitted state, threshold recomputed for another miscoverage level."""
        return replace(self, alpha=alpha, threshold=calibration_threshold(self.calibration_scores, alpha))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "type": "conformal-pipeline",
            "mode": self.mode.value,
            "K": self.K,
            "p": self.p,
            "alpha": self.alpha,
            "threshold": float(self.threshold),
            "alignment": self.alignment.to_one_based(),
            "classifier": self.classifier.to_dict(),
            "calibration_scores": self.calibration_scores.tolist(),
            "calibration_summary": dict(self.calibration_summary),
            "n_train": self.n_train,
            "n_calib": self.n_calib,
            "seed": self.seed.to_dict(),
            "clusterer_spec": self.clusterer_spec.model_dump(mode="json") if self.clusterer_spec else None,
            "classifier_spec": self.classifier_spec.model_dump(mode="json") if self.classifier_spec else None,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ConformalPipeline":
        if payload.get("format_version") != FORMAT_VERSION or payload.get("type") != "conformal-pipeline":
            raise DataIOError(
                "Unsupported pipeline document",
                context={"format_version": payload.get("format_version"), "type": payload.get("type")},
            )
        try:
            return cls(
                classifier=classifier_from_dict(payload["classifier"]),
                alignment=Permutation.from_one_based(payload["alignment"]),
                threshold=parse_float(payload["threshold"]),
                alpha=float(payload["alpha"]),
                mode=PipelineMode(payload["mode"]),
                calibration_scores=np.asarray(payload["calibration_scores"], dtype=float),
                seed=RandomSeed(**payload["seed"]),
                clusterer_spec=ClustererSpec(**payload["clusterer_spec"]) if payload.get("clusterer_spec") else None,
                classifier_spec=ClassifierSpec(**payload["classifier_spec"]) if payload.get("classifier_spec") else None,
                n_train=int(payload.get("n_train", 0)),
                n_calib=int(payload.get("n_calib", 0)),
                calibration_summary={k: float(v) for k, v in payload.get("calibration_summary", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataIOError(f"Malformed pipeline document: {e}", original_error=e) from e


@dataclass(frozen=True)
class CutoffPredictor:
    """Soft clusterer fitted on the whole pool, queried through cutoff sets."""
    clusterer: FittedClusterer
    alpha: float
    n_features: int

    def __post_init__(self):
        check_alpha(self.alpha)

    @property
    def K(self) -> int:
        return self.clusterer.K

    def predict_membership(self, X: QueryData) -> np.ndarray:
        features = _features(X)
        if features.shape[1] != self.n_features:
            raise InvalidArgumentError(f"Expected {self.n_features} features, got {features.shape[1]}")
        return cutoff_membership(self.clusterer.soft_labels(features).rows, self.alpha)


def predict_sets(predictor: SetPredictor, X_query: QueryData) -> List[ConfidenceSet]:
    """Confidence set of every query row."""
    return sets_from_membership(predictor.predict_membership(X_query))


# -- stages ---------------------------------------------------------------------------------


@handle_stage_error("split")
def _split_stage(X: Dataset, train_fraction: float, seed: RandomSeed) -> SplitIndices:
    return split_indices(X.n, train_fraction, seed.derive("split"))


def _cluster_labels(
    X: Dataset,
    K: int,
    spec: ClustererSpec,
    mode: PipelineMode,
    seed: RandomSeed,
    part: str,
    oracle: Optional[PosteriorModel],
) -> Tuple[FittedClusterer, Labeling]:
    clusterer = fit_soft_clusterer(X, K, spec, seed.derive("cluster", part), oracle=oracle)
    soft: SoftLabelMatrix = clusterer.soft_labels(X)
    if mode == PipelineMode.NAIVE_HARD:
        labels = soft.argmax_labels()
    else:
        labels = sample_stochastic_labels(soft, seed.derive("labels", part))
    get_metrics_collector().increment("clusterer_fits")
    return clusterer, labels


@handle_stage_error("cluster_train")
def _cluster_train_stage(X, K, spec, mode, seed, oracle):
    return _cluster_labels(X, K, spec, mode, seed, "train", oracle)


@handle_stage_error("cluster_calib")
def _cluster_calib_stage(X, K, spec, mode, seed, oracle):
    return _cluster_labels(X, K, spec, mode, seed, "calib", oracle)


@handle_stage_error("classifier")
def _classifier_stage(
    X: Dataset,
    Y: Labeling,
    K: int,
    spec: ClassifierSpec,
    seed: RandomSeed,
    clusterer: Optional[FittedClusterer],
) -> ClassifierModel:
    return fit_soft_classifier(X, Y, K, spec, seed.derive("classifier"), clusterer=clusterer)


@handle_stage_error("alignment")
def _alignment_stage(classifier: ClassifierModel, X: Dataset, Y: Labeling, K: int) -> Permutation:
    predicted = hard_rule_labels(classifier, X)
    return solve_assignment(build_confusion_cost(predicted, Y, K))


@handle_stage_error("calibration")
def _calibration_stage(
    classifier: ClassifierModel,
    X: Dataset,
    aligned_labels: np.ndarray,
    alpha: float,
) -> Tuple[np.ndarray, float]:
    scores = aps_scores_at(classifier.predict_proba_matrix(X.features), aligned_labels)
    return scores, calibration_threshold(scores, alpha)


# -- entry points ---------------------------------------------------------------------------


def fit_conformal_pipeline(
    X: Dataset,
    K: int,
    alpha: float,
    clusterer_spec: ClustererSpec,
    classifier_spec: ClassifierSpec,
    mode: PipelineMode,
    seed: RandomSeed,
    train_fraction: float = ConformalDefaults.TRAIN_FRACTION.value,
    bypass_classifier: bool = False,
    oracle: Optional[PosteriorModel] = None,
) -> ConformalPipeline:
    """
    Fit split conformal clustering on an unlabeled sample.

    Args:
        X: Unlabeled observations (split into training and calibration halves)
        K: Number of clusters
        alpha: Miscoverage level in (0, 1)
        clusterer_spec: Soft clustering backend
        classifier_spec: Soft classifier fitted on the training cluster labels
        mode: 'stochastic' samples labels from soft labels; 'naive-hard' takes argmax labels
        seed: Root seed; every stage uses its own derived sub-stream
        train_fraction: Share of observations in the training half
        bypass_classifier: Use the training clusterer's soft labels as class
            probabilities instead of fitting a classifier
        oracle: Known posterior for clusterer kind 'oracle'

    Returns:
        Fitted ConformalPipeline

    Raises:
        InvalidArgumentError: If n < 2K or alpha is outside (0, 1)
        PipelineStageError: If a stage fails; the message names the stage
    """
    alpha = check_alpha(alpha)
    mode = PipelineMode(mode)
    if mode == PipelineMode.ORACLE_LABELS:
        raise InvalidArgumentError("Use fit_split_conformal_classifier for supplied labels")
    if K < 1 or X.n < 2 * K:
        raise InvalidArgumentError(f"Need n >= 2K observations, got n={X.n}, K={K}")
    if bypass_classifier:
        classifier_spec = classifier_spec.model_copy(update={"kind": ClassifierKind.CLUSTERER_BYPASS})

    context = {"mode": mode.value, "K": K, "n": X.n, "alpha": alpha, "seed": seed.seed, "stream": seed.stream}
    logger.info("Fitting conformal pipeline", context)

    split = _split_stage(X, train_fraction, seed)
    X_train, X_calib = X.subset(split.train), X.subset(split.calib)

    train_clusterer, Y_train = _cluster_train_stage(X_train, K, clusterer_spec, mode, seed, oracle)
    bypassed = train_clusterer if classifier_spec.kind == ClassifierKind.CLUSTERER_BYPASS else None
    classifier = _classifier_stage(X_train, Y_train, K, classifier_spec, seed, bypassed)

    _, Y_calib = _cluster_calib_stage(X_calib, K, clusterer_spec, mode, seed, oracle)
    alignment = _alignment_stage(classifier, X_calib, Y_calib, K)
    scores, threshold = _calibration_stage(classifier, X_calib, alignment.apply(Y_calib), alpha)

    logger.info(
        "Conformal pipeline fitted",
        {**context, "threshold": threshold, "alignment": alignment.to_one_based()},
    )
    return ConformalPipeline(
        classifier=classifier,
        alignment=alignment,
        threshold=threshold,
        alpha=alpha,
        mode=mode,
        calibration_scores=scores,
        seed=seed,
        clusterer_spec=clusterer_spec,
        classifier_spec=classifier_spec,
        n_train=X_train.n,
        n_calib=X_calib.n,
        calibration_summary=summarize_scores(scores),
    )


def fit_split_conformal_classifier(
    X: Dataset,
    Y: Labeling,
    K: int,
    alpha: float,
    classifier_spec: ClassifierSpec,
    seed: RandomSeed,
    train_fraction: float = ConformalDefaults.TRAIN_FRACTION.value,
) -> ConformalPipeline:
    """
    Ordinary split conformal classification on supplied labels.

    No clustering takes place and the alignment is the identity; this is the
    exchangeable control for the calibration path.
    """
    alpha = check_alpha(alpha)
    if X.n != Y.n:
        raise InvalidArgumentError(f"Features and labels differ in length: {X.n} vs {Y.n}")
    if classifier_spec.kind == ClassifierKind.CLUSTERER_BYPASS:
        raise InvalidArgumentError("Supplied-label calibration needs a trainable classifier")
    labels = Labeling(Y.labels, K)

    split = _split_stage(X, train_fraction, seed)
    X_train, X_calib = X.subset(split.train), X.subset(split.calib)
    classifier = _classifier_stage(X_train, labels.subset(split.train), K, classifier_spec, seed, None)
    alignment = Permutation.identity(K)
    scores, threshold = _calibration_stage(classifier, X_calib, labels.subset(split.calib).labels, alpha)
    return ConformalPipeline(
        classifier=classifier,
        alignment=alignment,
        threshold=threshold,
        alpha=alpha,
        mode=PipelineMode.ORACLE_LABELS,
        calibration_scores=scores,
        seed=seed,
        classifier_spec=classifier_spec,
        n_train=X_train.n,
        n_calib=X_calib.n,
        calibration_summary=summarize_scores(scores),
    )


@handle_stage_error("cutoff_clustering")
def fit_cutoff_predictor(
    X: Dataset,
    K: int,
    alpha: float,
    clusterer_spec: ClustererSpec,
    seed: RandomSeed,
    oracle: Optional[PosteriorModel] = None,
) -> CutoffPredictor:
    """Fit the soft clusterer on the whole pool for cutoff-set prediction."""
    alpha = check_alpha(alpha)
    clusterer = fit_soft_clusterer(X, K, clusterer_spec, seed.derive("cluster", "full"), oracle=oracle)
    return CutoffPredictor(clusterer=clusterer, alpha=alpha, n_features=X.p)


def save_pipeline(pipeline: ConformalPipeline, path: str, config_hash: Optional[str] = None) -> str:
    return save_json(pipeline.to_dict(), path, config_hash)


def load_pipeline(path: str) -> ConformalPipeline:
    return ConformalPipeline.from_dict(load_json(path))
