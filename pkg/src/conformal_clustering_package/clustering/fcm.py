"""
Fuzzy c-means soft clustering (Bezdek iteration).

Memberships follow u_k(x) = 1 / sum_j (d_k / d_j)^(2 / (m - 1)), evaluated in
log-space; a point sitting on one or more centroids splits its mass evenly
over them.
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from conformal_clustering_package.config.constants import FORMAT_VERSION, ClusteringDefaults
from conformal_clustering_package.core.types import Dataset, ProbVector, RandomSeed
from conformal_clustering_package.utils.error_handler import DataIOError, InvalidArgumentError
from conformal_clustering_package.utils.logger import get_logger

from .initialization import kmeans_plus_plus_centers

logger = get_logger("fcm")


@dataclass(frozen=True)
class FcmModel:
    """Fitted fuzzy c-means centroids and fuzziness exponent m."""
    centroids: np.ndarray
    fuzziness: float
    n_iter: int = 0
    converged: bool = False
    objective: float = float("nan")

    def __post_init__(self):
        centroids = np.atleast_2d(np.array(self.centroids, dtype=float))
        if not np.all(np.isfinite(centroids)):
            raise InvalidArgumentError("FCM centroids must be finite")
        if not self.fuzziness > 1.0:
            raise InvalidArgumentError(f"Fuzziness m must exceed 1, got {self.fuzziness}")
        centroids.setflags(write=False)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "fuzziness", float(self.fuzziness))

    @property
    def K(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def p(self) -> int:
        return int(self.centroids.shape[1])

    def posterior_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise InvalidArgumentError(f"Expected {self.p} features, got {X.shape[1]}")
        return membership_matrix(X, self.centroids, self.fuzziness)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "type": "fcm",
            "K": self.K,
            "p": self.p,
            "centroids": self.centroids.tolist(),
            "fuzziness": self.fuzziness,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "objective": self.objective,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "FcmModel":
        if payload.get("format_version") != FORMAT_VERSION or payload.get("type") != "fcm":
            raise DataIOError("Unsupported FCM model document", context={"format_version": payload.get("format_version")})
        return cls(
            centroids=np.asarray(payload["centroids"], dtype=float),
            fuzziness=float(payload["fuzziness"]),
            n_iter=int(payload.get("n_iter", 0)),
            converged=bool(payload.get("converged", False)),
            objective=float(payload.get("objective", float("nan"))),
        )


def membership_matrix(X: np.ndarray, centroids: np.ndarray, fuzziness: float) -> np.ndarray:
    """(n, K) FCM memberships of each row of X."""
    squared = cdist(X, centroids, metric="sqeuclidean")
    coincident = squared < ClusteringDefaults.FCM_COINCIDENCE.value ** 2
    on_centroid = coincident.any(axis=1)

    memberships = np.empty_like(squared)
    if np.any(on_centroid):
        hits = coincident[on_centroid].astype(float)
        memberships[on_centroid] = hits / hits.sum(axis=1, keepdims=True)
    free = ~on_centroid
    if np.any(free):
        # d_k^(-2/(m-1)) == (d_k^2)^(-1/(m-1))
        log_weights = -np.log(squared[free]) / (fuzziness - 1.0)
        memberships[free] = np.exp(log_weights - logsumexp(log_weights, axis=1, keepdims=True))
    return memberships


def fcm_membership(model: FcmModel, x: np.ndarray) -> ProbVector:
    """Membership vector of a single feature vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return ProbVector(model.posterior_matrix(x)[0])


def fit_fcm(
    X: Dataset,
    n_clusters: int,
    seed: RandomSeed,
    fuzziness: float = ClusteringDefaults.FCM_FUZZINESS.value,
    tol: float = ClusteringDefaults.FCM_TOL.value,
    max_iter: int = ClusteringDefaults.FCM_MAX_ITER.value,
) -> FcmModel:
    """
    Fit fuzzy c-means by alternating membership and centroid updates.

    Centroids are seeded with D^2 sampling and updated as u^m-weighted means;
    iteration stops once no centroid moves by more than ``tol``.

    Raises:
        InvalidArgumentError: If K > n, K < 1 or m <= 1
    """
    if n_clusters < 1 or n_clusters > X.n:
        raise InvalidArgumentError(f"Need 1 <= K <= n, got K={n_clusters}, n={X.n}")
    if not fuzziness > 1.0:
        raise InvalidArgumentError(f"Fuzziness m must exceed 1, got {fuzziness}")

    data = X.features
    centroids = kmeans_plus_plus_centers(data, n_clusters, seed.derive("fcm-init").generator())
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        weights = membership_matrix(data, centroids, fuzziness) ** fuzziness
        updated = weights.T @ data / weights.sum(axis=0)[:, None]
        displacement = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if displacement < tol:
            converged = True
            break

    memberships = membership_matrix(data, centroids, fuzziness)
    objective = float(np.sum(memberships ** fuzziness * cdist(data, centroids, metric="sqeuclidean")))
    if not converged:
        logger.warning("FCM reached max_iter before centroids settled", {"max_iter": max_iter, "K": n_clusters})
    return FcmModel(centroids=centroids, fuzziness=fuzziness, n_iter=n_iter, converged=converged, objective=objective)
