"""
Empirical consistency and stability diagnostics for soft clusterers.

estimation error  E_n: mean L1 gap between fitted and true soft labels.
stability         S_n: total variation between the joint label laws of two
                  fits that differ in one input point, reported through the
                  Hellinger product bound
                  ||P - Q||_1 <= 2 sqrt(2 (1 - prod_j (1 - H_j^2))).
Both quantities feed the lower bound on coverage
    1 - alpha - n/(n+2) E_{n/2} - n/(2(n+2)) S_{n/2}.

Fitted components are matched to their reference by the assignment solver
(minimal total L1 gap) before any differencing.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from conformal_clustering_package.align.assignment import solve_assignment
from conformal_clustering_package.clustering.stochastic import fit_soft_clusterer
from conformal_clustering_package.config.constants import ConformalDefaults
from conformal_clustering_package.config.specs import ClustererSpec
from conformal_clustering_package.core.types import Dataset, RandomSeed
from conformal_clustering_package.simulate.generators import GeneratorConfig, generate_mixture_data
from conformal_clustering_package.utils.error_handler import (
    ConformalClusteringError,
    DiagnosticsError,
    InvalidArgumentError,
    UnsupportedSizeError,
)
from conformal_clustering_package.utils.logger import get_logger
from conformal_clustering_package.utils.metrics import get_metrics_collector

logger = get_logger("diagnostics")


# -- Hellinger / total variation helpers ---------------------------------------------------


def hellinger_squared(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise squared Hellinger distance 1 - sum_k sqrt(p_k q_k), in [0, 1]."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    return np.clip(1.0 - np.sum(np.sqrt(p * q), axis=1), 0.0, 1.0)


def hellinger_product_bound(h2: Sequence[float]) -> float:
    """Upper bound on the L1 distance of two product laws from per-factor H^2."""
    h2 = np.clip(np.asarray(h2, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        log_affinity = float(np.sum(np.log1p(-h2)))
    gap = -math.expm1(log_affinity)
    return float(min(2.0, 2.0 * math.sqrt(2.0 * max(gap, 0.0))))


def exact_product_l1(P: np.ndarray, Q: np.ndarray) -> float:
    """
    Exact L1 distance between the product laws with factor rows P[j] and Q[j].

    Enumerates all K^m joint outcomes, so only small instances are allowed.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if P.shape != Q.shape:
        raise InvalidArgumentError(f"Factor matrices differ in shape: {P.shape} vs {Q.shape}")
    m, K = P.shape
    limit = ConformalDefaults.ENUMERATION_LIMIT.value
    if K ** m > limit:
        raise UnsupportedSizeError(f"K^m = {K}^{m} exceeds the enumeration limit {limit}", context={"K": K, "m": m})
    joint_p, joint_q = P[0], Q[0]
    for j in range(1, m):
        joint_p = np.outer(joint_p, P[j]).ravel()
        joint_q = np.outer(joint_q, Q[j]).ravel()
    return float(np.sum(np.abs(joint_p - joint_q)))


def align_columns(fitted: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Permute the columns of ``fitted`` to minimize the total L1 gap to ``reference``."""
    cost = np.abs(fitted[:, :, None] - reference[:, None, :]).sum(axis=0)
    permutation = solve_assignment(cost)
    aligned = np.empty_like(fitted)
    aligned[:, permutation.mapping] = fitted
    return aligned


def coverage_bound_rhs(alpha: float, E_half: float, S_half: float, n: int) -> float:
    """1 - alpha - n/(n+2) E_{n/2} - n/(2(n+2)) S_{n/2}; may be negative (vacuous)."""
    if n < 2 or n % 2:
        raise InvalidArgumentError(f"n must be an even count >= 2, got {n}")
    if not all(math.isfinite(v) for v in (alpha, E_half, S_half)):
        raise InvalidArgumentError("Bound inputs must be finite")
    return 1.0 - alpha - (n / (n + 2.0)) * E_half - (n / (2.0 * (n + 2.0))) * S_half


# -- Monte Carlo estimates -----------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticEstimate:
    """Monte Carlo average over successful replications."""
    value: float
    std_error: float
    reps: int
    n_failed: int
    values: tuple = field(default_factory=tuple, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "std_error": self.std_error, "reps": self.reps, "n_failed": self.n_failed}


def _monte_carlo(name: str, reps: int, run_rep: Callable[[int], float]) -> DiagnosticEstimate:
    if reps < 1:
        raise InvalidArgumentError(f"reps must be >= 1, got {reps}")
    values: List[float] = []
    failed = 0
    metrics = get_metrics_collector()
    for rep in range(reps):
        try:
            values.append(run_rep(rep))
        except ConformalClusteringError as e:
            failed += 1
            metrics.increment("failed_replications")
            logger.warning(f"{name} replication failed", {"rep": rep, "error": type(e).__name__, "message": e.message})
    max_failed = ConformalDefaults.MAX_FAILURE_RATE.value * reps
    if failed > max_failed or not values:
        raise DiagnosticsError(
            f"{name}: {failed} of {reps} replications failed",
            context={"failed": failed, "reps": reps},
        )
    array = np.asarray(values)
    std_error = float(array.std(ddof=1) / np.sqrt(array.size)) if array.size > 1 else 0.0
    return DiagnosticEstimate(
        value=float(array.mean()), std_error=std_error, reps=reps, n_failed=failed, values=tuple(values)
    )


def _check_known_posterior(generator: Any) -> GeneratorConfig:
    if not isinstance(generator, GeneratorConfig):
        raise InvalidArgumentError("Diagnostics need a simulation generator with a known posterior")
    return generator


def estimation_gap(spec: ClustererSpec, X: Dataset, generator: GeneratorConfig, seed: RandomSeed) -> float:
    """Mean L1 gap between fitted and true soft labels on X after component matching."""
    clusterer = fit_soft_clusterer(X, generator.K, spec, seed, oracle=generator)
    fitted = np.asarray(clusterer.soft_labels(X).rows)
    truth = generator.posterior_matrix(X.features)
    return float(np.mean(np.abs(align_columns(fitted, truth) - truth).sum(axis=1)))


def estimate_estimation_error(
    clusterer_spec: ClustererSpec,
    generator: GeneratorConfig,
    n: int,
    reps: int,
    seed: RandomSeed,
) -> DiagnosticEstimate:
    """
    Monte Carlo estimate of E_n over independent samples of size n.

    Raises:
        DiagnosticsError: If more than 20% of the replications fail
    """
    generator = _check_known_posterior(generator)

    def run_rep(rep: int) -> float:
        X, _ = generate_mixture_data(generator, n, seed.derive("estimation", rep, "data"))
        return estimation_gap(clusterer_spec, X, generator, seed.derive("estimation", rep, "fit"))

    return _monte_carlo("estimation error", reps, run_rep)


def replace_one_factors(
    spec: ClustererSpec,
    X: Dataset,
    replacement: np.ndarray,
    K: int,
    seed: RandomSeed,
    oracle: Optional[GeneratorConfig] = None,
):
    """
    Soft labels of the shared points X_2..X_n under the original fit and
    under the fit with X_1 replaced (same clustering seed).

    Returns:
        (P, Q): (n - 1, K) factor matrices, Q matched to P's components
    """
    if X.n < 2:
        raise InvalidArgumentError("Replace-one stability needs n >= 2")
    swapped = np.array(X.features)
    swapped[0] = np.asarray(replacement, dtype=float).reshape(-1)
    original = fit_soft_clusterer(X, K, spec, seed, oracle=oracle)
    refit = fit_soft_clusterer(Dataset(swapped), K, spec, seed, oracle=oracle)
    shared = X.features[1:]
    P = np.asarray(original.soft_labels(shared).rows)
    Q = align_columns(np.asarray(refit.soft_labels(shared).rows), P)
    return P, Q


def estimate_stability_upper(
    clusterer_spec: ClustererSpec,
    generator: GeneratorConfig,
    n: int,
    reps: int,
    seed: RandomSeed,
) -> DiagnosticEstimate:
    """
    Monte Carlo estimate of the Hellinger upper bound on S_n.

    Raises:
        DiagnosticsError: If more than 20% of the replications fail
    """
    generator = _check_known_posterior(generator)

    def run_rep(rep: int) -> float:
        X, _ = generate_mixture_data(generator, n, seed.derive("stability", rep, "data"))
        fresh, _ = generate_mixture_data(generator, 1, seed.derive("stability", rep, "replacement"))
        P, Q = replace_one_factors(
            clusterer_spec, X, fresh.features[0], generator.K, seed.derive("stability", rep, "fit"), oracle=generator
        )
        return hellinger_product_bound(hellinger_squared(P, Q))

    return _monte_carlo("stability", reps, run_rep)


# -- reports -------------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsReport:
    """E_hat and S_hat_upper estimated at n/2, and the resulting coverage bound at n."""
    E_hat: float
    S_hat_upper: float
    bound_rhs: float
    n: int
    reps: int
    alpha: float
    E_std_error: float = 0.0
    S_std_error: float = 0.0
    n_failed: int = 0

    @property
    def vacuous(self) -> bool:
        return self.bound_rhs <= 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "reps": self.reps,
            "alpha": self.alpha,
            "E_hat": self.E_hat,
            "E_std_error": self.E_std_error,
            "S_hat_upper": self.S_hat_upper,
            "S_std_error": self.S_std_error,
            "bound_rhs": self.bound_rhs,
            "vacuous": self.vacuous,
            "n_failed": self.n_failed,
        }


def run_diagnostics(
    clusterer_spec: ClustererSpec,
    generator: GeneratorConfig,
    n: int,
    reps: int,
    alpha: float,
    seed: RandomSeed,
) -> DiagnosticsReport:
    """Estimate E and S at n/2 and evaluate the coverage bound for sample size n."""
    half = n // 2
    if half < 2:
        raise InvalidArgumentError(f"n must be >= 4 for diagnostics, got {n}")
    logger.info("Running diagnostics", {"n": n, "reps": reps, "seed": seed.seed})
    estimation = estimate_estimation_error(clusterer_spec, generator, half, reps, seed.derive("n", n))
    stability = estimate_stability_upper(clusterer_spec, generator, half, reps, seed.derive("n", n))
    return DiagnosticsReport(
        E_hat=estimation.value,
        S_hat_upper=stability.value,
        bound_rhs=coverage_bound_rhs(alpha, estimation.value, stability.value, 2 * half),
        n=2 * half,
        reps=reps,
        alpha=alpha,
        E_std_error=estimation.std_error,
        S_std_error=stability.std_error,
        n_failed=estimation.n_failed + stability.n_failed,
    )


def run_diagnostics_sweep(
    clusterer_spec: ClustererSpec,
    generator: GeneratorConfig,
    n_grid: Sequence[int],
    reps: int,
    alpha: float,
    seed: RandomSeed,
) -> List[DiagnosticsReport]:
    return [run_diagnostics(clusterer_spec, generator, int(n), reps, alpha, seed) for n in n_grid]


def reports_to_frame(reports: Sequence[DiagnosticsReport]) -> pd.DataFrame:
    return pd.DataFrame([report.to_dict() for report in reports])
