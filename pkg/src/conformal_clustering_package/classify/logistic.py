"""
Multinomial logistic regression over random Fourier features.

The feature map cos(x W + b) * sqrt(2 / D), with W ~ N(0, 1 / bandwidth^2) and
b ~ U(0, 2 pi), approximates an RBF kernel, so the linear softmax model on
top behaves like a kernel classifier. Training minimizes the mean
cross-entropy plus (ridge / 2) * ||W||^2 (intercept unpenalized) by full-batch
gradient descent with Armijo backtracking.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import log_softmax, logsumexp, softmax

from conformal_clustering_package.config.constants import FORMAT_VERSION, ClassifierDefaults, ClassifierKind
from conformal_clustering_package.config.specs import ClassifierSpec
from conformal_clustering_package.core.types import RandomSeed
from conformal_clustering_package.utils.error_handler import InvalidArgumentError, NumericError
from conformal_clustering_package.utils.logger import get_logger

from .base import ClassifierModel

logger = get_logger("logistic_classifier")

MIN_STEP = 1e-20


@dataclass(frozen=True)
class RandomFourierFeatures:
    """Seeded RBF-surrogate feature map."""
    frequencies: np.ndarray
    offsets: np.ndarray
    bandwidth: float

    @property
    def dim(self) -> int:
        return int(self.frequencies.shape[1])

    def transform(self, X: np.ndarray) -> np.ndarray:
        return np.sqrt(2.0 / self.dim) * np.cos(X @ self.frequencies + self.offsets)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frequencies": self.frequencies.tolist(),
            "offsets": self.offsets.tolist(),
            "bandwidth": self.bandwidth,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "RandomFourierFeatures":
        return cls(
            frequencies=np.asarray(payload["frequencies"], dtype=float),
            offsets=np.asarray(payload["offsets"], dtype=float),
            bandwidth=float(payload["bandwidth"]),
        )


def median_distance_bandwidth(X: np.ndarray, subsample: int, rng: np.random.Generator) -> float:
    """Median pairwise Euclidean distance on a random subsample (1.0 if degenerate)."""
    if X.shape[0] > subsample:
        X = X[np.sort(rng.choice(X.shape[0], size=subsample, replace=False))]
    if X.shape[0] < 2:
        return 1.0
    median = float(np.median(pdist(X)))
    return median if median > 0 else 1.0


def build_feature_map(
    X: np.ndarray,
    n_features: int,
    bandwidth: Optional[float],
    subsample: int,
    seed: RandomSeed,
) -> RandomFourierFeatures:
    rng = seed.generator()
    if bandwidth is None:
        bandwidth = median_distance_bandwidth(X, subsample, rng)
    frequencies = rng.normal(scale=1.0 / bandwidth, size=(X.shape[1], n_features))
    offsets = rng.uniform(0.0, 2.0 * np.pi, size=n_features)
    return RandomFourierFeatures(frequencies=frequencies, offsets=offsets, bandwidth=float(bandwidth))


class LogisticClassifier(ClassifierModel):
    """Softmax model; ``weights`` has one row per design column (intercept last)."""

    kind = ClassifierKind.MULTINOMIAL_LOGISTIC

    def __init__(self, weights: np.ndarray, n_inputs: int, feature_map: Optional[RandomFourierFeatures] = None):
        weights = np.array(weights, dtype=float)
        design_dim = (feature_map.dim if feature_map is not None else n_inputs) + 1
        if weights.ndim != 2 or weights.shape[0] != design_dim:
            raise InvalidArgumentError(f"Weight matrix must have {design_dim} rows, got shape {weights.shape}")
        if weights.shape[1] < 2:
            raise InvalidArgumentError("Multinomial logistic regression needs K >= 2")
        weights.setflags(write=False)
        self.weights = weights
        self.n_inputs = int(n_inputs)
        self.feature_map = feature_map

    @property
    def K(self) -> int:
        return int(self.weights.shape[1])

    @property
    def p(self) -> int:
        return self.n_inputs

    def design(self, X: np.ndarray) -> np.ndarray:
        features = self.feature_map.transform(X) if self.feature_map is not None else X
        return np.hstack([features, np.ones((X.shape[0], 1))])

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        """Logits before the softmax."""
        return self.design(np.atleast_2d(np.asarray(X, dtype=float))) @ self.weights

    def _proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision_scores(X), axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind.value,
            "K": self.K,
            "p": self.p,
            "weights": self.weights.tolist(),
            "feature_map": self.feature_map.to_dict() if self.feature_map is not None else None,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "LogisticClassifier":
        feature_map = payload.get("feature_map")
        return cls(
            weights=np.asarray(payload["weights"], dtype=float),
            n_inputs=int(payload["p"]),
            feature_map=RandomFourierFeatures.from_dict(feature_map) if feature_map else None,
        )


def _objective(design: np.ndarray, targets: np.ndarray, weights: np.ndarray, ridge: float) -> Tuple[float, np.ndarray]:
    """Penalized mean cross-entropy and its gradient."""
    n = design.shape[0]
    logits = design @ weights
    loss = -float(np.sum(targets * log_softmax(logits, axis=1))) / n
    penalized = weights[:-1]
    loss += 0.5 * ridge * float(np.sum(penalized ** 2))
    residual = np.exp(logits - logsumexp(logits, axis=1, keepdims=True)) - targets
    gradient = design.T @ residual / n
    gradient[:-1] += ridge * penalized
    return loss, gradient


def _standardization(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale <= 0] = 1.0
    return center, scale


def _fold_standardization(weights: np.ndarray, center: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Weights on standardized inputs -> the same affine model on raw inputs."""
    slopes = weights[:-1] / scale[:, None]
    intercept = weights[-1] - center @ slopes
    return np.vstack([slopes, intercept])


def fit_logistic(
    X: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    spec: ClassifierSpec,
    seed: RandomSeed,
) -> LogisticClassifier:
    """
    Fit the softmax model by gradient descent with backtracking.

    Each iteration starts from twice the previously accepted step and halves
    it until the Armijo condition holds; accepted steps never increase the
    loss. Stops once the gradient norm falls below ``spec.tol``.
    Without random features the inputs are standardized for the descent and
    the result is folded back into weights on the raw inputs.

    Raises:
        InvalidArgumentError: If K < 2
        NumericError: If the loss becomes non-finite
    """
    if n_classes < 2:
        raise InvalidArgumentError("Multinomial logistic regression needs K >= 2")
    feature_map = None
    if spec.random_features > 0:
        feature_map = build_feature_map(
            X, spec.random_features, spec.bandwidth, spec.bandwidth_subsample, seed.derive("random-features")
        )
    if feature_map is None:
        center, scale = _standardization(X)
        design = np.hstack([(X - center) / scale, np.ones((X.shape[0], 1))])
    else:
        design = LogisticClassifier(np.zeros((feature_map.dim + 1, n_classes)), X.shape[1], feature_map).design(X)
    targets = np.zeros((X.shape[0], n_classes))
    targets[np.arange(X.shape[0]), labels] = 1.0

    weights = np.zeros((design.shape[1], n_classes))
    loss, gradient = _objective(design, targets, weights, spec.ridge)
    step = 1.0
    converged = False
    iteration = 0
    for iteration in range(1, spec.max_iter + 1):
        grad_sq = float(np.sum(gradient ** 2))
        if np.sqrt(grad_sq) < spec.tol:
            converged = True
            break
        step = min(2.0 * step, ClassifierDefaults.MAX_STEP.value)
        while True:
            candidate = weights - step * gradient
            candidate_loss, candidate_gradient = _objective(design, targets, candidate, spec.ridge)
            if not np.isfinite(candidate_loss):
                raise NumericError("Non-finite loss in logistic regression", context={"iteration": iteration})
            if candidate_loss <= loss - ClassifierDefaults.ARMIJO_C.value * step * grad_sq:
                break
            step /= 2.0
            if step < MIN_STEP:
                break
        if step < MIN_STEP:
            break
        weights, loss, gradient = candidate, candidate_loss, candidate_gradient

    if feature_map is None:
        weights = _fold_standardization(weights, center, scale)

    logger.debug(
        "Logistic regression fitted",
        {"iterations": iteration, "converged": converged, "loss": loss, "K": n_classes, "design_dim": design.shape[1]},
    )
    return LogisticClassifier(weights, X.shape[1], feature_map)
