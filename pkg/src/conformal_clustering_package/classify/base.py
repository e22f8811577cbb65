"""
Soft classifier interface.

Uses Strategy pattern: every classifier kind implements the same probability
interface so the conformal pipeline never branches on the kind.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from conformal_clustering_package.config.constants import ClassifierKind
from conformal_clustering_package.utils.error_handler import InvalidArgumentError


class ClassifierModel(ABC):
    """Fitted soft classifier pi: R^p -> simplex over K labels."""

    kind: ClassifierKind

    @property
    @abstractmethod
    def K(self) -> int:
        pass

    @property
    @abstractmethod
    def p(self) -> int:
        pass

    @abstractmethod
    def _proba(self, X: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        """(n, K) class probabilities for the rows of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise InvalidArgumentError(f"Classifier expects {self.p} features, got {X.shape[1]}")
        return self._proba(X)
