from typing import Any, Dict

import numpy as np
from scipy.spatial.distance import cdist

from conformal_clustering_package.config.constants import FORMAT_VERSION, ClassifierKind
from conformal_clustering_package.utils.error_handler import InvalidArgumentError
from conformal_clustering_package.utils.logger import get_logger

from .base import ClassifierModel

logger = get_logger("knn_classifier")


class KnnSoftClassifier(ClassifierModel):
    """
    Laplace-smoothed k-nearest-neighbor label frequencies.

    pi(x)_j = (#{neighbors with label j} + 1/K) / (k + 1); distance ties are
    broken by training order.
    """

    kind = ClassifierKind.KNN_SOFT

    def __init__(self, train_features: np.ndarray, train_labels: np.ndarray, n_classes: int, n_neighbors: int):
        train_features = np.atleast_2d(np.array(train_features, dtype=float))
        train_labels = np.array(train_labels, dtype=np.int64)
        if train_features.shape[0] != train_labels.shape[0]:
            raise InvalidArgumentError("Training features and labels differ in length")
        if not 1 <= n_neighbors <= train_features.shape[0]:
            raise InvalidArgumentError(
                f"knn-soft needs 1 <= k <= n_train, got k={n_neighbors}, n_train={train_features.shape[0]}"
            )
        train_features.setflags(write=False)
        train_labels.setflags(write=False)
        self.train_features = train_features
        self.train_labels = train_labels
        self.n_classes = int(n_classes)
        self.n_neighbors = int(n_neighbors)

    @property
    def K(self) -> int:
        return self.n_classes

    @property
    def p(self) -> int:
        return int(self.train_features.shape[1])

    def _proba(self, X: np.ndarray) -> np.ndarray:
        distances = cdist(X, self.train_features)
        nearest = np.argsort(distances, axis=1, kind="stable")[:, : self.n_neighbors]
        neighbor_labels = self.train_labels[nearest]
        counts = np.stack([np.sum(neighbor_labels == j, axis=1) for j in range(self.K)], axis=1)
        return (counts + 1.0 / self.K) / (self.n_neighbors + 1.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind.value,
            "K": self.K,
            "p": self.p,
            "n_neighbors": self.n_neighbors,
            "train_features": self.train_features.tolist(),
            "train_labels": (self.train_labels + 1).tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "KnnSoftClassifier":
        return cls(
            train_features=np.asarray(payload["train_features"], dtype=float),
            train_labels=np.asarray(payload["train_labels"], dtype=np.int64) - 1,
            n_classes=int(payload["K"]),
            n_neighbors=int(payload["n_neighbors"]),
        )


def fit_knn(X: np.ndarray, labels: np.ndarray, n_classes: int, n_neighbors: int) -> KnnSoftClassifier:
    """Store the training set; k is capped at n_train."""
    if n_neighbors > X.shape[0]:
        logger.warning("Neighbor count capped at training size", {"requested": n_neighbors, "n_train": X.shape[0]})
        n_neighbors = X.shape[0]
    return KnnSoftClassifier(X, labels, n_classes, n_neighbors)
