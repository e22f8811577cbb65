"""
Ground-truth mixture generators with known posteriors.

Gaussian components are center + N(0, sigma2 * I). Gamma components draw every
coordinate independently from a gamma law with mean equal to the center
coordinate and variance sigma2 (shape = center^2 / sigma2, scale = sigma2 / center).
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import logsumexp

from conformal_clustering_package.clustering.mixture import component_log_densities
from conformal_clustering_package.config.constants import GeneratorFamily, MixtureFamily
from conformal_clustering_package.core.sampling import categorical_from_uniforms
from conformal_clustering_package.core.types import Dataset, Labeling, ProbVector, RandomSeed
from conformal_clustering_package.utils.error_handler import InvalidArgumentError


class GeneratorConfig(BaseModel):
    """Mixture with fixed centers and a common variance."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: GeneratorFamily = Field(default=GeneratorFamily.GAUSSIAN)
    centers: List[List[float]] = Field(description="K component centers in R^p (feature units)")
    sigma2: float = Field(gt=0, description="Common per-coordinate variance")
    weights: Optional[List[float]] = Field(default=None, description="Mixing weights; uniform when omitted")

    @field_validator("centers")
    @classmethod
    def _rectangular(cls, centers: List[List[float]]) -> List[List[float]]:
        if not centers or not centers[0]:
            raise ValueError("at least one non-empty center is required")
        if len({len(c) for c in centers}) != 1:
            raise ValueError("all centers must have the same dimension")
        if not np.all(np.isfinite(np.asarray(centers, dtype=float))):
            raise ValueError("centers must be finite")
        return centers

    @model_validator(mode="after")
    def _consistent(self) -> "GeneratorConfig":
        if self.family == GeneratorFamily.GAMMA and np.any(np.asarray(self.centers, dtype=float) <= 0):
            raise ValueError("centers: gamma components need strictly positive center coordinates")
        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != (len(self.centers),):
                raise ValueError(f"weights: expected {len(self.centers)} entries, got {weights.size}")
            if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-6:
                raise ValueError("weights: must be nonnegative and sum to 1")
        return self

    @property
    def K(self) -> int:
        return len(self.centers)

    @property
    def p(self) -> int:
        return len(self.centers[0])

    def center_matrix(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    def weight_vector(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.K, 1.0 / self.K)
        weights = np.asarray(self.weights, dtype=float)
        return weights / weights.sum()

    def with_sigma2(self, sigma2: float) -> "GeneratorConfig":
        return self.model_copy(update={"sigma2": float(sigma2)})

    def posterior_matrix(self, X: np.ndarray) -> np.ndarray:
        """Bayes posterior of the generating component for every row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.p:
            raise InvalidArgumentError(f"Expected {self.p} features, got {X.shape[1]}")
        family = MixtureFamily.GAUSSIAN_DIAG if self.family == GeneratorFamily.GAUSSIAN else MixtureFamily.GAMMA_INDEPENDENT
        variances = np.full((self.K, self.p), self.sigma2)
        with np.errstate(divide="ignore"):
            log_joint = component_log_densities(family, self.center_matrix(), variances, X) + np.log(self.weight_vector())
        return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))


def true_posterior(cfg: GeneratorConfig, x: np.ndarray) -> ProbVector:
    return ProbVector(cfg.posterior_matrix(np.asarray(x, dtype=float).reshape(1, -1))[0])


def generate_mixture_data(cfg: GeneratorConfig, n: int, seed: RandomSeed) -> Tuple[Dataset, Labeling]:
    """
    Draw n labeled observations.

    Labels come first (one uniform each, inverse CDF), then features, all from
    the seed's single stream.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    rng = seed.generator()
    weights = np.broadcast_to(cfg.weight_vector(), (n, cfg.K))
    labels = categorical_from_uniforms(weights, rng.random(n))
    centers = cfg.center_matrix()[labels]
    if cfg.family == GeneratorFamily.GAUSSIAN:
        features = centers + rng.normal(scale=np.sqrt(cfg.sigma2), size=(n, cfg.p))
    else:
        features = rng.gamma(shape=centers ** 2 / cfg.sigma2, scale=cfg.sigma2 / centers)
    return Dataset(features), Labeling(labels, cfg.K)


def _triangle_centers(side: float = 3.0) -> np.ndarray:
    radius = side / np.sqrt(3.0)
    return np.array([[0.0, radius], [-side / 2.0, -radius / 2.0], [side / 2.0, -radius / 2.0]])


def _corner_centers(p: int, K: int, distance: float) -> np.ndarray:
    return np.eye(K, p) * (distance / np.sqrt(2.0))


PRESETS = ("gmm-2d", "gamma-2d", "gmm-highdim", "gamma-highdim")


def preset_generator(name: str, sigma2: float) -> GeneratorConfig:
    """
    Named center layouts.

    gmm-2d:        equilateral triangle of side 3 centered at the origin (p=2, K=3)
    gamma-2d:      the same triangle shifted by (8, 8)
    gmm-highdim:   scaled unit corners e_k * 7/sqrt(2) in R^50, pairwise distance 7 (K=5)
    gamma-highdim: 5 + scaled unit corners in R^30, pairwise distance 3 (K=5)

    Around sigma2 = 1.5 (2-D), 4.5 (gmm-highdim) and 0.9 (gamma-highdim) the
    Bayes error of every layout is close to 0.2.
    """
    if name == "gmm-2d":
        return GeneratorConfig(family=GeneratorFamily.GAUSSIAN, centers=_triangle_centers().tolist(), sigma2=sigma2)
    if name == "gamma-2d":
        return GeneratorConfig(family=GeneratorFamily.GAMMA, centers=(_triangle_centers() + 8.0).tolist(), sigma2=sigma2)
    if name == "gmm-highdim":
        return GeneratorConfig(family=GeneratorFamily.GAUSSIAN, centers=_corner_centers(50, 5, distance=7.0).tolist(), sigma2=sigma2)
    if name == "gamma-highdim":
        return GeneratorConfig(family=GeneratorFamily.GAMMA, centers=(_corner_centers(30, 5, distance=3.0) + 5.0).tolist(), sigma2=sigma2)
    raise InvalidArgumentError(f"Unknown generator preset {name!r}; choose one of {', '.join(PRESETS)}")


class GeneratorSource(BaseModel):
    """Config fragment naming a generator: explicit, or a preset plus its variance."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    generator: Optional[GeneratorConfig] = Field(default=None, description="Explicit generator")
    preset: Optional[str] = Field(default=None, description=f"Named generator layout: {', '.join(PRESETS)}")
    sigma2: Optional[float] = Field(default=None, gt=0, description="Common variance (required with a preset)")

    @model_validator(mode="after")
    def _one_source(self) -> "GeneratorSource":
        if (self.generator is None) == (self.preset is None):
            raise ValueError("exactly one of generator and preset must be given")
        if self.preset is not None:
            if self.preset not in PRESETS:
                raise ValueError(f"preset: unknown layout {self.preset!r}")
            if self.sigma2 is None:
                raise ValueError("sigma2: required when a preset is used")
        return self

    def resolved_generator(self) -> GeneratorConfig:
        if self.preset is not None:
            return preset_generator(self.preset, self.sigma2)
        if self.sigma2 is not None:
            return self.generator.with_sigma2(self.sigma2)
        return self.generator
