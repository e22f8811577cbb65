"""
Parametric mixture models fitted by EM.

Families:
    gaussian-full      full covariance per component
    gaussian-diag      diagonal covariance per component
    gamma-independent  independent gamma coordinates parameterized by mean and
                       variance (shape = mean^2 / var, scale = var / mean)

The gamma M-step matches weighted moments per coordinate instead of solving
the digamma likelihood equations, so gamma fits are approximate MLEs. Every
fit is guarded so that its reported log-likelihood history never decreases.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from conformal_clustering_package.config.constants import (
    FORMAT_VERSION,
    ClusteringDefaults,
    InitStrategy,
    MixtureFamily,
)
from conformal_clustering_package.core.types import Dataset, ProbVector, RandomSeed, normalize_probability_rows
from conformal_clustering_package.utils.error_handler import (
    DataIOError,
    DegenerateFitError,
    InvalidArgumentError,
    NumericError,
)
from conformal_clustering_package.utils.logger import get_logger

from .initialization import hard_responsibilities, kmeans_plus_plus_centers

logger = get_logger("mixture_em")


@dataclass(frozen=True)
class FitLog:
    """Summary of an iterative fit."""
    log_likelihood: float
    n_iter: int
    converged: bool
    history: Tuple[float, ...] = field(default_factory=tuple)
    restart: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "log_likelihood": self.log_likelihood,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "history": list(self.history),
            "restart": self.restart,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "FitLog":
        return cls(
            log_likelihood=float(payload["log_likelihood"]),
            n_iter=int(payload["n_iter"]),
            converged=bool(payload["converged"]),
            history=tuple(float(v) for v in payload.get("history", [])),
            restart=int(payload.get("restart", 0)),
        )


@dataclass(frozen=True)
class MixtureModel:
    """
    Fitted mixture: a generalizable soft clusterer.

    ``dispersion`` holds (K, p, p) covariances for gaussian-full and (K, p)
    variance vectors for gaussian-diag and gamma-independent.
    """
    family: MixtureFamily
    weights: np.ndarray
    means: np.ndarray
    dispersion: np.ndarray
    fit_log: Optional[FitLog] = None

    def __post_init__(self):
        family = MixtureFamily(self.family)
        weights = normalize_probability_rows(self.weights)
        means = np.atleast_2d(np.array(self.means, dtype=float))
        dispersion = np.array(self.dispersion, dtype=float)
        K, p = means.shape
        if weights.shape != (K,):
            raise InvalidArgumentError(f"Expected {K} weights, got shape {weights.shape}")
        if family == MixtureFamily.GAUSSIAN_FULL:
            if dispersion.shape != (K, p, p):
                raise InvalidArgumentError(f"Full covariances must have shape {(K, p, p)}, got {dispersion.shape}")
            if not np.allclose(dispersion, np.swapaxes(dispersion, 1, 2)):
                raise InvalidArgumentError("Covariance matrices must be symmetric")
            if np.any(np.linalg.eigvalsh(dispersion) <= 0):
                raise InvalidArgumentError("Covariance matrices must be positive definite")
        else:
            if dispersion.shape != (K, p):
                raise InvalidArgumentError(f"Variances must have shape {(K, p)}, got {dispersion.shape}")
            if np.any(dispersion <= 0):
                raise InvalidArgumentError("Variances must be positive")
        if family == MixtureFamily.GAMMA_INDEPENDENT and np.any(means <= 0):
            raise InvalidArgumentError("Gamma components require positive means")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(dispersion))):
            raise InvalidArgumentError("Mixture parameters must be finite")
        for name, value in (("weights", weights), ("means", means), ("dispersion", dispersion)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "family", family)

    @property
    def K(self) -> int:
        return int(self.means.shape[0])

    @property
    def p(self) -> int:
        return int(self.means.shape[1])

    def component_log_densities(self, X: np.ndarray) -> np.ndarray:
        """(n, K) matrix of per-component log-densities."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise InvalidArgumentError(f"Expected {self.p} features, got {X.shape[1]}")
        return component_log_densities(self.family, self.means, self.dispersion, X)

    def log_joint(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_weights = np.log(self.weights)
        return self.component_log_densities(X) + log_weights[None, :]

    def posterior_matrix(self, X: np.ndarray) -> np.ndarray:
        """Rows of component posteriors, computed in log-space."""
        log_joint = self.log_joint(X)
        normalizer = logsumexp(log_joint, axis=1, keepdims=True)
        if not np.all(np.isfinite(normalizer)):
            raise NumericError("Every component log-density is -inf for some query point")
        return np.exp(log_joint - normalizer)

    def log_likelihood(self, X: np.ndarray) -> float:
        return float(np.sum(logsumexp(self.log_joint(X), axis=1)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "type": "mixture",
            "family": self.family.value,
            "K": self.K,
            "p": self.p,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "dispersion": self.dispersion.tolist(),
            "fit_log": self.fit_log.to_dict() if self.fit_log else None,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "MixtureModel":
        if payload.get("format_version") != FORMAT_VERSION or payload.get("type") != "mixture":
            raise DataIOError("Unsupported mixture model document", context={"format_version": payload.get("format_version")})
        fit_log = payload.get("fit_log")
        return cls(
            family=MixtureFamily(payload["family"]),
            weights=np.asarray(payload["weights"], dtype=float),
            means=np.asarray(payload["means"], dtype=float),
            dispersion=np.asarray(payload["dispersion"], dtype=float),
            fit_log=FitLog.from_dict(fit_log) if fit_log else None,
        )


def component_log_densities(family: MixtureFamily, means: np.ndarray, dispersion: np.ndarray, X: np.ndarray) -> np.ndarray:
    K = means.shape[0]
    out = np.empty((X.shape[0], K))
    if family == MixtureFamily.GAUSSIAN_FULL:
        for k in range(K):
            out[:, k] = np.atleast_1d(stats.multivariate_normal.logpdf(X, mean=means[k], cov=dispersion[k]))
    elif family == MixtureFamily.GAUSSIAN_DIAG:
        for k in range(K):
            out[:, k] = stats.norm.logpdf(X, loc=means[k], scale=np.sqrt(dispersion[k])).sum(axis=1)
    else:
        # gamma densities are evaluated on the clipped point so posteriors stay
        # defined outside the positive orthant
        support = np.maximum(X, ClusteringDefaults.GAMMA_SUPPORT_EPS.value)
        shapes, scales = gamma_shape_scale(means, dispersion)
        for k in range(K):
            out[:, k] = stats.gamma.logpdf(support, a=shapes[k], scale=scales[k]).sum(axis=1)
    return out


def gamma_shape_scale(means: np.ndarray, variances: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Mean/variance to gamma shape/scale."""
    return means ** 2 / variances, variances / means


def mixture_posterior(model: MixtureModel, x: np.ndarray) -> ProbVector:
    """Posterior component probabilities at a single feature vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return ProbVector(model.posterior_matrix(x)[0])


def default_family(p: int) -> MixtureFamily:
    if p > ClusteringDefaults.HIGH_DIM_THRESHOLD.value:
        return MixtureFamily.GAUSSIAN_DIAG
    return MixtureFamily.GAUSSIAN_FULL


def _m_step(
    X: np.ndarray,
    resp: np.ndarray,
    family: MixtureFamily,
    variance_floor: float,
    iteration: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n, p = X.shape
    totals = resp.sum(axis=0)
    weights = totals / n
    if np.any(weights < ClusteringDefaults.MIN_COMPONENT_WEIGHT.value):
        collapsed = int(np.argmin(weights))
        raise DegenerateFitError(
            f"Component {collapsed + 1} collapsed (weight {weights[collapsed]:.3g})",
            iteration=iteration,
            context={"component": collapsed + 1},
        )
    means = resp.T @ X / totals[:, None]
    K = means.shape[0]

    if family == MixtureFamily.GAUSSIAN_FULL:
        dispersion = np.empty((K, p, p))
        for k in range(K):
            diff = X - means[k]
            cov = (resp[:, k, None] * diff).T @ diff / totals[k]
            eigenvalues, eigenvectors = np.linalg.eigh((cov + cov.T) / 2.0)
            eigenvalues = np.maximum(eigenvalues, variance_floor)
            dispersion[k] = (eigenvectors * eigenvalues) @ eigenvectors.T
            dispersion[k] = (dispersion[k] + dispersion[k].T) / 2.0
    else:
        dispersion = np.empty((K, p))
        for k in range(K):
            dispersion[k] = resp[:, k] @ (X - means[k]) ** 2 / totals[k]
        dispersion = np.maximum(dispersion, variance_floor)

    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(dispersion))):
        raise DegenerateFitError("Non-finite parameters after M-step", iteration=iteration)
    if family == MixtureFamily.GAMMA_INDEPENDENT and np.any(means <= 0):
        raise DegenerateFitError("Gamma component mean left the positive orthant", iteration=iteration)
    return weights, means, dispersion


def _run_em(
    X: np.ndarray,
    resp: np.ndarray,
    family: MixtureFamily,
    tol: float,
    max_iter: int,
    variance_floor: float,
    restart: int,
) -> MixtureModel:
    n = X.shape[0]
    current = _m_step(X, resp, family, variance_floor, iteration=0)
    scored = current
    history = []
    converged = False

    for iteration in range(1, max_iter + 1):
        weights, means, dispersion = current
        with np.errstate(divide="ignore"):
            log_joint = component_log_densities(family, means, dispersion, X) + np.log(weights)[None, :]
        rows = logsumexp(log_joint, axis=1)
        log_likelihood = float(rows.sum())
        if not np.isfinite(log_likelihood):
            raise DegenerateFitError("Log-likelihood is not finite", iteration=iteration)
        if history and log_likelihood < history[-1] - ClusteringDefaults.ASCENT_SLACK.value:
            # approximate M-steps (variance floor, gamma moments) may overshoot;
            # keep the last parameters that improved the likelihood
            logger.debug(
                "EM ascent guard stopped iteration",
                {"iteration": iteration, "restart": restart, "drop": history[-1] - log_likelihood},
            )
            converged = True
            break
        scored = current
        history.append(log_likelihood)
        if len(history) > 1 and (history[-1] - history[-2]) / n < tol:
            converged = True
            break
        resp = np.exp(log_joint - rows[:, None])
        current = _m_step(X, resp, family, variance_floor, iteration=iteration)

    weights, means, dispersion = scored
    return MixtureModel(
        family=family,
        weights=weights,
        means=means,
        dispersion=dispersion,
        fit_log=FitLog(
            log_likelihood=history[-1],
            n_iter=len(history),
            converged=converged,
            history=tuple(history),
            restart=restart,
        ),
    )


def fit_mixture_em(
    X: Dataset,
    n_components: int,
    seed: RandomSeed,
    family: Optional[MixtureFamily] = None,
    init: InitStrategy = InitStrategy.KMEANS_PP,
    tol: float = ClusteringDefaults.EM_TOL.value,
    max_iter: int = ClusteringDefaults.EM_MAX_ITER.value,
    n_restarts: int = ClusteringDefaults.EM_RESTARTS.value,
    variance_floor: float = ClusteringDefaults.VARIANCE_FLOOR.value,
    init_means: Optional[np.ndarray] = None,
) -> MixtureModel:
    """
    Fit a mixture by EM, keeping the best of several restarts.

    A restart stops once the log-likelihood gain of an iteration, divided by
    the number of observations, falls below ``tol``.

    Args:
        X: Observations
        n_components: Number of components K
        seed: Randomness for initialization; restart r uses sub-stream ('em-restart', r)
        family: Mixture family (None: gaussian-diag when p > 50, else gaussian-full)
        init: kmeans++ seeding plus one hard-assignment M-step, or random
            Dirichlet responsibilities
        tol: Stop when the mean per-observation log-likelihood gains less than this
        max_iter: Maximum EM iterations per restart
        n_restarts: Number of independent initializations
        variance_floor: Floor on covariance eigenvalues / variances
        init_means: Explicit initial centers (K, p); disables restarts

    Returns:
        Fitted MixtureModel with the best log-likelihood

    Raises:
        InvalidArgumentError: If n < K or gamma data are not all positive
        DegenerateFitError: If every restart collapsed
    """
    family = MixtureFamily(family) if family is not None else default_family(X.p)
    data = X.features
    if n_components < 1:
        raise InvalidArgumentError(f"Number of components must be >= 1, got {n_components}")
    if X.n < n_components:
        raise InvalidArgumentError(f"Need n >= K observations, got n={X.n}, K={n_components}")
    if family == MixtureFamily.GAMMA_INDEPENDENT and np.any(data <= 0):
        raise InvalidArgumentError("Gamma mixtures require strictly positive feature values")

    if init_means is not None:
        centers = np.atleast_2d(np.asarray(init_means, dtype=float))
        if centers.shape != (n_components, X.p):
            raise InvalidArgumentError(f"init_means must have shape {(n_components, X.p)}, got {centers.shape}")
        return _run_em(data, hard_responsibilities(data, centers), family, tol, max_iter, variance_floor, restart=0)

    best: Optional[MixtureModel] = None
    last_error: Optional[DegenerateFitError] = None
    for restart in range(n_restarts):
        rng = seed.derive("em-restart", restart).generator()
        if InitStrategy(init) == InitStrategy.KMEANS_PP:
            resp = hard_responsibilities(data, kmeans_plus_plus_centers(data, n_components, rng))
        else:
            resp = rng.dirichlet(np.ones(n_components), size=X.n)
        try:
            candidate = _run_em(data, resp, family, tol, max_iter, variance_floor, restart)
        except DegenerateFitError as e:
            logger.warning(
                "EM restart collapsed",
                {"restart": restart, "iteration": e.iteration, "seed": seed.seed, "stream": seed.stream},
            )
            last_error = e
            continue
        if best is None or candidate.fit_log.log_likelihood > best.fit_log.log_likelihood:
            best = candidate

    if best is None:
        raise last_error
    logger.debug(
        "EM fit complete",
        {"family": family.value, "K": n_components, "log_likelihood": best.fit_log.log_likelihood,
         "n_iter": best.fit_log.n_iter, "restart": best.fit_log.restart},
    )
    return best
