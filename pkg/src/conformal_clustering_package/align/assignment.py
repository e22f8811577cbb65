"""
Label alignment as a linear assignment problem.

Among optimal permutations the lexicographically smallest one is returned, so
that alignment is reproducible even when several relabelings tie.
"""

import itertools
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from conformal_clustering_package.config.constants import ConformalDefaults
from conformal_clustering_package.core.types import Labeling
from conformal_clustering_package.utils.error_handler import InvalidArgumentError, UnsupportedSizeError

_TIE_RTOL = 1e-12
_TIE_ATOL = 1e-12


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0, ..., K-1}: label k is renamed ``mapping[k]``."""
    mapping: np.ndarray

    def __post_init__(self):
        mapping = np.array(self.mapping, dtype=np.int64).reshape(-1)
        if mapping.size == 0 or not np.array_equal(np.sort(mapping), np.arange(mapping.size)):
            raise InvalidArgumentError(f"Not a permutation: {mapping.tolist()}")
        mapping.setflags(write=False)
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, K: int) -> "Permutation":
        return cls(np.arange(K))

    @classmethod
    def from_one_based(cls, values: Sequence[int]) -> "Permutation":
        return cls(np.asarray(values, dtype=np.int64) - 1)

    @property
    def K(self) -> int:
        return int(self.mapping.size)

    def apply(self, labels: Union[np.ndarray, Labeling]) -> np.ndarray:
        if isinstance(labels, Labeling):
            labels = labels.labels
        return self.mapping[np.asarray(labels, dtype=np.int64)]

    def inverse(self) -> "Permutation":
        return Permutation(np.argsort(self.mapping))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.mapping, np.arange(self.K)))

    def to_one_based(self) -> List[int]:
        return (self.mapping + 1).tolist()

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.mapping, other.mapping)

    def __hash__(self) -> int:
        return hash(tuple(self.mapping.tolist()))


@dataclass(frozen=True)
class CostMatrix:
    """Square K x K assignment costs; entry (k, j) is the cost of renaming k as j."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] == 0:
            raise InvalidArgumentError(f"Cost matrix must be square and nonempty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("Cost matrix entries must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def K(self) -> int:
        return int(self.values.shape[0])

    def total(self, permutation: Permutation) -> float:
        return float(self.values[np.arange(self.K), permutation.mapping].sum())


def _as_cost(cost: Union[CostMatrix, np.ndarray]) -> CostMatrix:
    return cost if isinstance(cost, CostMatrix) else CostMatrix(np.asarray(cost))


def build_confusion_cost(predicted: Labeling, clustered: Labeling, K: int) -> CostMatrix:
    """
    Misclassification counts of every renaming.

    Entry (k, j) counts points with cluster label k whose predicted label is
    not j, so the total cost of a permutation is the number of disagreements
    after renaming the cluster labels with it.
    """
    if predicted.n != clustered.n:
        raise InvalidArgumentError(f"Label vectors differ in length: {predicted.n} vs {clustered.n}")
    if predicted.K > K or clustered.K > K:
        raise InvalidArgumentError(f"Labels exceed the alphabet size K={K}")
    joint = np.bincount(clustered.labels * K + predicted.labels, minlength=K * K).reshape(K, K).astype(np.int64)
    return CostMatrix(joint.sum(axis=1, keepdims=True) - joint)


def _optimal_value(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(values)
    return float(values[rows, cols].sum())


def _ties(a: float, b: float) -> bool:
    return bool(np.isclose(a, b, rtol=_TIE_RTOL, atol=_TIE_ATOL))


def solve_assignment(cost: Union[CostMatrix, np.ndarray]) -> Permutation:
    """
    Minimum-cost permutation (Hungarian method), lexicographically smallest among ties.

    Rows are fixed in order, each to the smallest column that still admits an
    optimal completion of the remaining rows. Every candidate column costs one
    Hungarian solve of the remaining block, so the walk makes O(K^2) solves and
    runs in O(K^5) time in the worst case.
    """
    values = _as_cost(cost).values.astype(float)
    K = values.shape[0]
    best = _optimal_value(values)

    mapping = np.empty(K, dtype=np.int64)
    free_cols = list(range(K))
    fixed = 0.0
    for row in range(K):
        for col in free_cols:
            rest_cols = [c for c in free_cols if c != col]
            completion = _optimal_value(values[np.ix_(np.arange(row + 1, K), rest_cols)])
            if _ties(fixed + values[row, col] + completion, best):
                mapping[row] = col
                fixed += values[row, col]
                free_cols = rest_cols
                break
        else:
            # rounding drift only; fall back to the solver's own choice for this row
            _, cols = linear_sum_assignment(values[np.ix_(np.arange(row, K), free_cols)])
            col = free_cols[int(cols[0])]
            mapping[row] = col
            fixed += values[row, col]
            free_cols = [c for c in free_cols if c != col]
    return Permutation(mapping)


def brute_force_assignment(cost: Union[CostMatrix, np.ndarray]) -> Permutation:
    """Exhaustive search over all K! permutations in lexicographic order."""
    values = _as_cost(cost).values.astype(float)
    K = values.shape[0]
    limit = ConformalDefaults.BRUTE_FORCE_MAX_K.value
    if K > limit:
        raise UnsupportedSizeError(f"Exhaustive assignment supports K <= {limit}, got K={K}", context={"K": K})

    rows = np.arange(K)
    best_total = np.inf
    best = None
    for candidate in itertools.permutations(range(K)):
        total = float(values[rows, candidate].sum())
        if total < best_total and not _ties(total, best_total):
            best_total, best = total, candidate
    return Permutation(np.asarray(best))
