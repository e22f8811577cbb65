from .base import ClassifierModel
from .bypass import ClustererBypassClassifier
from .classifier import (
    classifier_from_dict,
    classifier_to_dict,
    fit_soft_classifier,
    hard_rule,
    hard_rule_labels,
    predict_proba,
    predict_proba_matrix,
)
from .knn import KnnSoftClassifier
from .logistic import LogisticClassifier, RandomFourierFeatures

__all__ = [
    "ClassifierModel",
    "ClustererBypassClassifier",
    "KnnSoftClassifier",
    "LogisticClassifier",
    "RandomFourierFeatures",
    "classifier_from_dict",
    "classifier_to_dict",
    "fit_soft_classifier",
    "hard_rule",
    "hard_rule_labels",
    "predict_proba",
    "predict_proba_matrix",
]
