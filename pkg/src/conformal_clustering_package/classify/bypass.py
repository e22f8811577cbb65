from typing import Any, Dict

import numpy as np

from conformal_clustering_package.clustering.stochastic import FittedClusterer
from conformal_clustering_package.config.constants import FORMAT_VERSION, ClassifierKind

from .base import ClassifierModel


class ClustererBypassClassifier(ClassifierModel):
    """Uses the training clusterer's soft labels as class probabilities."""

    kind = ClassifierKind.CLUSTERER_BYPASS

    def __init__(self, clusterer: FittedClusterer, n_inputs: int):
        self.clusterer = clusterer
        self.n_inputs = int(n_inputs)

    @property
    def K(self) -> int:
        return self.clusterer.K

    @property
    def p(self) -> int:
        return self.n_inputs

    def _proba(self, X: np.ndarray) -> np.ndarray:
        return np.array(self.clusterer.soft_labels(X).rows)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind.value,
            "K": self.K,
            "p": self.p,
            "clusterer": self.clusterer.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ClustererBypassClassifier":
        return cls(FittedClusterer.from_dict(payload["clusterer"]), int(payload["p"]))
