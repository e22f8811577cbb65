"""
Data splitting, categorical sampling and simplex order statistics.
"""

from typing import Tuple

import numpy as np

from conformal_clustering_package.utils.error_handler import InvalidArgumentError

from .types import ArrayLike, ProbVector, RandomSeed, SplitIndices, normalize_probability_rows


def split_indices(n: int, train_fraction: float, seed: RandomSeed) -> SplitIndices:
    """
    Uniformly random train / calibration partition of {0, ..., n-1}.

    The index set is shuffled (Fisher-Yates, via ``Generator.permutation``)
    and cut after round(train_fraction * n) entries; both parts are returned
    sorted.

    Raises:
        InvalidArgumentError: If n < 2, the fraction is outside (0, 1) or
            either part would be empty
    """
    if n < 2:
        raise InvalidArgumentError(f"Need at least 2 observations to split, got n={n}")
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = int(np.floor(train_fraction * n + 0.5))
    if n_train < 1 or n_train > n - 1:
        raise InvalidArgumentError(
            f"train_fraction={train_fraction} leaves an empty part for n={n}",
            context={"n": n, "n_train": n_train},
        )
    order = seed.generator().permutation(n)
    return SplitIndices(train=np.sort(order[:n_train]), calib=np.sort(order[n_train:]))


def categorical_from_uniforms(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """
    Inverse-CDF categorical draws, one uniform per row.

    Zero-probability labels are never returned: a label is selected only
    where the cumulative sum strictly increases past the uniform, and the
    rounding overflow at the top end falls back to the last positive entry.
    """
    probs = np.atleast_2d(probs)
    uniforms = np.asarray(uniforms, dtype=float).reshape(-1)
    cumulative = np.cumsum(probs, axis=1)
    labels = np.sum(cumulative <= uniforms[:, None], axis=1)
    overflow = labels >= probs.shape[1]
    if np.any(overflow):
        positive = probs[overflow] > 0
        last_positive = probs.shape[1] - 1 - np.argmax(positive[:, ::-1], axis=1)
        labels[overflow] = last_positive
    return labels.astype(np.int64)


def sample_categorical(p: ProbVector, seed: RandomSeed) -> int:
    """Draw one label from Cat(p) using the first uniform of the seed's stream."""
    u = seed.generator().random(1)
    return int(categorical_from_uniforms(p.entries[None, :], u)[0])


def simplex_ranks(p: ProbVector) -> Tuple[np.ndarray, np.ndarray]:
    """
    Order statistics of a probability vector.

    Returns:
        (sorted, rank): entries in non-increasing order, and the 0-based
        position of each label in that order (ties by ascending label).
    """
    order, ranks = rank_matrix(p.entries[None, :])
    return p.entries[order[0]], ranks[0]


def rank_matrix(probs: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row-wise descending order and ranks of a probability matrix.

    Returns:
        (order, ranks) where ``order[i, r]`` is the label at position r of row
        i and ``ranks[i, k]`` the position of label k; ties by ascending label.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    order = np.argsort(-probs, axis=1, kind="stable")
    ranks = np.empty_like(order)
    rows = np.arange(probs.shape[0])[:, None]
    ranks[rows, order] = np.arange(probs.shape[1])[None, :]
    return order, ranks


def as_probability_matrix(values: ArrayLike) -> np.ndarray:
    """Validated (n, K) probability matrix."""
    return np.atleast_2d(normalize_probability_rows(values))
