import numpy as np
from scipy.spatial.distance import cdist


def kmeans_plus_plus_centers(X: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """
    D^2-weighted center seeding.

    The first center is a uniformly chosen row; each further center is a row
    drawn with probability proportional to its squared distance to the
    nearest chosen center (uniform when all distances vanish).
    """
    n = X.shape[0]
    centers = np.empty((n_clusters, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = cdist(X, centers[:1], metric="sqeuclidean").ravel()
    for k in range(1, n_clusters):
        total = closest.sum()
        if total > 0:
            index = rng.choice(n, p=closest / total)
        else:
            index = rng.integers(n)
        centers[k] = X[index]
        closest = np.minimum(closest, cdist(X, centers[k:k + 1], metric="sqeuclidean").ravel())
    return centers


def hard_responsibilities(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """One-hot responsibilities of the nearest center (ties to the lower index)."""
    nearest = np.argmin(cdist(X, centers, metric="sqeuclidean"), axis=1)
    resp = np.zeros((X.shape[0], centers.shape[0]))
    resp[np.arange(X.shape[0]), nearest] = 1.0
    return resp
