"""
Adaptive prediction set (APS) scores, the split conformal threshold and the
set constructions built on them.

The score of label y is the total probability of the labels ranked strictly
above it (ties ranked by label index), so the top label always scores 0. The
randomized tie term of the original APS score is not used; sets are slightly
conservative as a result.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from conformal_clustering_package.config.constants import ConformalDefaults
from conformal_clustering_package.core.sampling import as_probability_matrix, rank_matrix
from conformal_clustering_package.core.types import ProbVector
from conformal_clustering_package.utils.error_handler import InvalidArgumentError

_CUMULATIVE_SLACK = 1e-12


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


@dataclass(frozen=True)
class ConfidenceSet:
    """Subset of the K labels, stored as sorted 0-based members."""
    members: Tuple[int, ...]
    K: int

    def __post_init__(self):
        members = tuple(sorted({int(m) for m in self.members}))
        if any(m < 0 or m >= self.K for m in members):
            raise InvalidArgumentError(f"Set members must lie in [0, {self.K - 1}], got {members}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_mask(cls, mask: Iterable[bool]) -> "ConfidenceSet":
        mask = np.asarray(list(mask), dtype=bool)
        return cls(tuple(np.flatnonzero(mask).tolist()), int(mask.size))

    @property
    def size(self) -> int:
        return len(self.members)

    def __contains__(self, label: int) -> bool:
        return int(label) in self.members

    def __len__(self) -> int:
        return self.size

    def to_one_based(self) -> List[int]:
        return [m + 1 for m in self.members]

    def format_members(self) -> str:
        return ";".join(str(m) for m in self.to_one_based())


def aps_score_matrix(probs: np.ndarray) -> np.ndarray:
    """(n, K) APS score of every label for every row."""
    probs = as_probability_matrix(probs)
    order, ranks = rank_matrix(probs)
    ordered = np.take_along_axis(probs, order, axis=1)
    above = np.zeros_like(ordered)
    above[:, 1:] = np.cumsum(ordered, axis=1)[:, :-1]
    return np.take_along_axis(above, ranks, axis=1)


def aps_scores_at(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """APS score of the given label in each row."""
    scores = aps_score_matrix(probs)
    return scores[np.arange(scores.shape[0]), np.asarray(labels, dtype=np.int64)]


def aps_score(pi: ProbVector, y: int) -> float:
    if not 0 <= y < pi.K:
        raise InvalidArgumentError(f"Label {y} outside [0, {pi.K - 1}]")
    return float(aps_score_matrix(pi.entries[None, :])[0, y])


def calibration_threshold(scores: Sequence[float], alpha: float) -> float:
    """
    The ceil((1 - alpha)(n + 1))-th smallest calibration score.

    Returns +inf when that index exceeds n, which makes every prediction set
    the full label set.
    """
    alpha = check_alpha(alpha)
    values = np.sort(np.asarray(scores, dtype=float).reshape(-1))
    n = values.size
    if n == 0:
        raise InvalidArgumentError("Need at least one calibration score")
    index = math.ceil((1.0 - alpha) * (n + 1) - ConformalDefaults.QUANTILE_INDEX_SLACK.value)
    index = max(index, 1)
    if index > n:
        return math.inf
    return float(values[index - 1])


def prediction_membership(probs: np.ndarray, threshold: float) -> np.ndarray:
    """(n, K) boolean membership of the APS sets at ``threshold``."""
    return aps_score_matrix(probs) <= threshold


def prediction_set(pi: ProbVector, threshold: float) -> ConfidenceSet:
    return ConfidenceSet.from_mask(prediction_membership(pi.entries[None, :], threshold)[0])


def cutoff_membership(probs: np.ndarray, alpha: float) -> np.ndarray:
    """
    (n, K) membership of the smallest top-ranked prefix reaching mass 1 - alpha.
    """
    alpha = check_alpha(alpha)
    probs = as_probability_matrix(probs)
    order, ranks = rank_matrix(probs)
    cumulative = np.cumsum(np.take_along_axis(probs, order, axis=1), axis=1)
    reached = cumulative >= 1.0 - alpha - _CUMULATIVE_SLACK
    reached[:, -1] = True
    cut = np.argmax(reached, axis=1)
    return ranks <= cut[:, None]


def cutoff_set(gamma: ProbVector, alpha: float) -> ConfidenceSet:
    return ConfidenceSet.from_mask(cutoff_membership(gamma.entries[None, :], alpha)[0])


def sets_from_membership(membership: np.ndarray) -> List[ConfidenceSet]:
    return [ConfidenceSet.from_mask(row) for row in np.asarray(membership, dtype=bool)]
