"""
Fitting, prediction and persistence entry points for soft classifiers.
"""

from typing import Any, Dict, Optional

import numpy as np

from conformal_clustering_package.clustering.stochastic import FittedClusterer
from conformal_clustering_package.config.constants import FORMAT_VERSION, ClassifierKind
from conformal_clustering_package.config.specs import ClassifierSpec
from conformal_clustering_package.core.types import Dataset, Labeling, ProbVector, RandomSeed
from conformal_clustering_package.utils.error_handler import DataIOError, InvalidArgumentError

from .base import ClassifierModel
from .bypass import ClustererBypassClassifier
from .knn import KnnSoftClassifier, fit_knn
from .logistic import LogisticClassifier, fit_logistic


def fit_soft_classifier(
    X: Dataset,
    Y: Labeling,
    n_classes: int,
    spec: ClassifierSpec,
    seed: RandomSeed,
    clusterer: Optional[FittedClusterer] = None,
) -> ClassifierModel:
    """
    Fit a soft classifier on cluster-labeled training data.

    Args:
        X: Training features
        Y: Training labels (classes absent from Y are allowed)
        n_classes: Label alphabet size K
        spec: Classifier kind and hyperparameters
        seed: Randomness for the random feature map
        clusterer: Training clusterer, required by kind 'clusterer-bypass'

    Returns:
        Fitted ClassifierModel

    Raises:
        InvalidArgumentError: On empty or mismatched training data
        NumericError: If logistic training diverges
    """
    if X.n == 0 or Y.n == 0:
        raise InvalidArgumentError("Training set is empty")
    if X.n != Y.n:
        raise InvalidArgumentError(f"Features and labels differ in length: {X.n} vs {Y.n}")
    if Y.K > n_classes:
        raise InvalidArgumentError(f"Labels use an alphabet of {Y.K} > K={n_classes}")

    if spec.kind == ClassifierKind.MULTINOMIAL_LOGISTIC:
        return fit_logistic(X.features, Y.labels, n_classes, spec, seed)
    if spec.kind == ClassifierKind.KNN_SOFT:
        return fit_knn(X.features, Y.labels, n_classes, spec.n_neighbors)
    if clusterer is None:
        raise InvalidArgumentError("Classifier kind 'clusterer-bypass' needs the training clusterer")
    if clusterer.K != n_classes:
        raise InvalidArgumentError(f"Bypassed clusterer has K={clusterer.K}, expected {n_classes}")
    return ClustererBypassClassifier(clusterer, X.p)


def predict_proba(model: ClassifierModel, x: np.ndarray) -> ProbVector:
    return ProbVector(model.predict_proba_matrix(np.asarray(x, dtype=float).reshape(1, -1))[0])


def predict_proba_matrix(model: ClassifierModel, X: Dataset) -> np.ndarray:
    return model.predict_proba_matrix(X.features)


def hard_rule(model: ClassifierModel, x: np.ndarray) -> int:
    """0-based argmax of predict_proba; ties go to the smallest label."""
    return predict_proba(model, x).argmax()


def hard_rule_labels(model: ClassifierModel, X: Dataset) -> Labeling:
    return Labeling(np.argmax(predict_proba_matrix(model, X), axis=1), model.K)


def classifier_to_dict(model: ClassifierModel) -> Dict[str, Any]:
    return model.to_dict()


def classifier_from_dict(payload: Dict[str, Any]) -> ClassifierModel:
    if payload.get("format_version") != FORMAT_VERSION:
        raise DataIOError("Unsupported classifier document", context={"format_version": payload.get("format_version")})
    try:
        kind = ClassifierKind(payload.get("kind"))
    except ValueError as e:
        raise DataIOError(f"Unknown classifier kind: {payload.get('kind')!r}", original_error=e) from e
    if kind == ClassifierKind.MULTINOMIAL_LOGISTIC:
        return LogisticClassifier.from_dict(payload)
    if kind == ClassifierKind.KNN_SOFT:
        return KnnSoftClassifier.from_dict(payload)
    return ClustererBypassClassifier.from_dict(payload)
