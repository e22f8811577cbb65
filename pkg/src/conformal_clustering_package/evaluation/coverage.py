"""
Coverage of cluster-label confidence sets under the oracle permutation.

Cluster labels are only defined up to relabeling, so coverage is measured
after renaming the true labels with the permutation that maximizes empirical
coverage on a held-out labeled test sample.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from conformal_clustering_package.align.assignment import Permutation, solve_assignment
from conformal_clustering_package.config.constants import PipelineMode
from conformal_clustering_package.conformal.pipeline import ConformalPipeline, SetPredictor
from conformal_clustering_package.conformal.scores import ConfidenceSet
from conformal_clustering_package.core.types import Dataset, Labeling
from conformal_clustering_package.utils.error_handler import InvalidArgumentError

SetsLike = Union[Sequence[ConfidenceSet], np.ndarray]


@dataclass(frozen=True)
class CoverageReport:
    oracle_permutation: Permutation
    coverage: float
    mean_set_size: float
    size_histogram: np.ndarray
    n_test: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "oracle_permutation": self.oracle_permutation.to_one_based(),
            "coverage": self.coverage,
            "mean_set_size": self.mean_set_size,
            "size_histogram": {str(size): int(count) for size, count in enumerate(self.size_histogram)},
            "n_test": self.n_test,
        }


def _membership(sets: SetsLike, K: Optional[int] = None) -> np.ndarray:
    if isinstance(sets, np.ndarray):
        return sets.astype(bool)
    sets = list(sets)
    if not sets:
        return np.zeros((0, K or 1), dtype=bool)
    width = sets[0].K
    membership = np.zeros((len(sets), width), dtype=bool)
    for i, confidence_set in enumerate(sets):
        membership[i, list(confidence_set.members)] = True
    return membership


def benefit_matrix(membership: np.ndarray, truth: Labeling) -> np.ndarray:
    """b[k, j] = #{i : truth_i = k and j in set_i}."""
    K = membership.shape[1]
    indicator = np.zeros((truth.n, K), dtype=np.int64)
    indicator[np.arange(truth.n), truth.labels] = 1
    return indicator.T @ membership.astype(np.int64)


def coverage_under(membership: np.ndarray, truth: Labeling, permutation: Permutation) -> float:
    """Fraction of rows whose relabeled true label lies in the set."""
    hits = membership[np.arange(truth.n), permutation.apply(truth.labels)]
    return float(np.mean(hits))


def oracle_permutation(sets: SetsLike, truth: Labeling) -> Permutation:
    """
    Relabeling of the true labels with maximal empirical coverage.

    Solved exactly as an assignment problem on the negated benefit matrix;
    ties resolve to the lexicographically smallest permutation.
    """
    membership = _membership(sets)
    if truth.n == 0 or membership.shape[0] == 0:
        raise InvalidArgumentError("Oracle permutation needs a nonempty test set")
    if membership.shape[0] != truth.n:
        raise InvalidArgumentError(f"Got {membership.shape[0]} sets for {truth.n} labels")
    if truth.K > membership.shape[1]:
        raise InvalidArgumentError(f"True labels use K={truth.K} > set width {membership.shape[1]}")
    truth = Labeling(truth.labels, membership.shape[1])
    return solve_assignment(-benefit_matrix(membership, truth))


def size_histogram(membership: np.ndarray) -> np.ndarray:
    """Counts of set sizes 0..K."""
    return np.bincount(membership.sum(axis=1), minlength=membership.shape[1] + 1)


def evaluate_coverage(
    predictor: SetPredictor,
    X_test: Dataset,
    Y_true: Labeling,
    permutation: Optional[Permutation] = None,
) -> CoverageReport:
    """
    Coverage and set-size statistics on a labeled test sample.

    Args:
        predictor: Fitted pipeline or cutoff predictor
        X_test: Test features, independent of fitting
        Y_true: Generating labels of the test points
        permutation: Fixed relabeling; defaults to the identity for pipelines
            calibrated on supplied labels and to the oracle permutation otherwise
    """
    if X_test.n != Y_true.n:
        raise InvalidArgumentError(f"Test features and labels differ in length: {X_test.n} vs {Y_true.n}")
    membership = predictor.predict_membership(X_test)
    truth = Labeling(Y_true.labels, membership.shape[1])
    if permutation is None:
        if isinstance(predictor, ConformalPipeline) and predictor.mode == PipelineMode.ORACLE_LABELS:
            permutation = Permutation.identity(membership.shape[1])
        else:
            permutation = oracle_permutation(membership, truth)
    sizes = membership.sum(axis=1)
    return CoverageReport(
        oracle_permutation=permutation,
        coverage=coverage_under(membership, truth, permutation),
        mean_set_size=float(np.mean(sizes)),
        size_histogram=size_histogram(membership),
        n_test=truth.n,
    )


def membership_from_sets(sets: List[ConfidenceSet]) -> np.ndarray:
    return _membership(sets)
