"""
Stochastic cluster labels and the generalizable soft clusterer wrapper.

A soft clusterer maps every feature vector to a point on the simplex; the
stochastic clustering draws each hard label from its row, while the one-hot
adapter turns a hard clustering into a (degenerate) soft one.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Protocol, Union

import numpy as np

from conformal_clustering_package.config.constants import ClustererKind
from conformal_clustering_package.config.specs import ClustererSpec
from conformal_clustering_package.core.sampling import categorical_from_uniforms
from conformal_clustering_package.core.types import Dataset, Labeling, ProbVector, RandomSeed, normalize_probability_rows
from conformal_clustering_package.utils.error_handler import DataIOError, InvalidArgumentError

from .fcm import FcmModel, fit_fcm
from .mixture import MixtureModel, fit_mixture_em


class PosteriorModel(Protocol):
    """Anything that evaluates soft labels on arbitrary feature vectors."""
    K: int

    def posterior_matrix(self, X: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class SoftLabelMatrix:
    """n soft labels, one simplex row per observation."""
    rows: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(normalize_probability_rows(self.rows))
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def K(self) -> int:
        return int(self.rows.shape[1])

    def row(self, i: int) -> ProbVector:
        return ProbVector(self.rows[i])

    def argmax_labels(self) -> Labeling:
        return Labeling(np.argmax(self.rows, axis=1), self.K)

    def __len__(self) -> int:
        return self.n


def sample_stochastic_labels(soft: SoftLabelMatrix, seed: RandomSeed) -> Labeling:
    """
    Draw one hard label per row from that row's soft label.

    Row i consumes the i-th uniform of the seed's counter-based stream, so a
    row's draw depends only on (seed, stream, i) and its own probabilities.
    """
    uniforms = seed.generator().random(soft.n)
    return Labeling(categorical_from_uniforms(soft.rows, uniforms), soft.K)


def one_hot_soft_labels(hard: Labeling) -> SoftLabelMatrix:
    rows = np.zeros((hard.n, hard.K))
    rows[np.arange(hard.n), hard.labels] = 1.0
    return SoftLabelMatrix(rows)


@dataclass(frozen=True)
class FittedClusterer:
    """
    A fitted generalizable soft clusterer.

    With ``one_hot`` set, soft labels are replaced by the one-hot encoding of
    their argmax, which turns the stochastic clustering into the hard one.
    """
    model: Union[MixtureModel, FcmModel, PosteriorModel]
    one_hot: bool = False

    @property
    def K(self) -> int:
        return int(self.model.K)

    def soft_labels(self, X: Union[Dataset, np.ndarray]) -> SoftLabelMatrix:
        features = X.features if isinstance(X, Dataset) else np.atleast_2d(np.asarray(X, dtype=float))
        rows = self.model.posterior_matrix(features)
        if self.one_hot:
            hard = np.zeros_like(rows)
            hard[np.arange(rows.shape[0]), np.argmax(rows, axis=1)] = 1.0
            rows = hard
        return SoftLabelMatrix(rows)

    def to_dict(self) -> Dict[str, Any]:
        if not isinstance(self.model, (MixtureModel, FcmModel)):
            raise DataIOError("Only mixture and FCM clusterers can be serialized")
        return {"model": self.model.to_dict(), "one_hot": self.one_hot}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "FittedClusterer":
        document = payload["model"]
        kind = document.get("type")
        if kind == "mixture":
            model = MixtureModel.from_dict(document)
        elif kind == "fcm":
            model = FcmModel.from_dict(document)
        else:
            raise DataIOError(f"Unknown clusterer document type: {kind!r}")
        return cls(model=model, one_hot=bool(payload.get("one_hot", False)))


def fit_soft_clusterer(
    X: Dataset,
    n_clusters: int,
    spec: ClustererSpec,
    seed: RandomSeed,
    oracle: Optional[PosteriorModel] = None,
) -> FittedClusterer:
    """
    Fit the clusterer described by ``spec`` on X.

    Args:
        X: Observations to cluster
        n_clusters: Number of clusters K
        spec: Backend and hyperparameters
        seed: Randomness for initialization
        oracle: Known posterior used by kind 'oracle' (simulation diagnostics)

    Returns:
        FittedClusterer exposing soft labels on arbitrary inputs
    """
    if spec.kind == ClustererKind.MIXTURE:
        model = fit_mixture_em(
            X,
            n_clusters,
            seed=seed,
            family=spec.family,
            init=spec.init,
            tol=spec.tol,
            max_iter=spec.max_iter,
            n_restarts=spec.n_restarts,
            variance_floor=spec.variance_floor,
        )
    elif spec.kind == ClustererKind.FCM:
        model = fit_fcm(X, n_clusters, seed=seed, fuzziness=spec.fuzziness, tol=spec.tol, max_iter=spec.max_iter)
    else:
        if oracle is None:
            raise InvalidArgumentError("Clusterer kind 'oracle' needs a known posterior (simulation generator)")
        if oracle.K != n_clusters:
            raise InvalidArgumentError(f"Oracle posterior has K={oracle.K}, expected {n_clusters}")
        model = oracle
    return FittedClusterer(model=model, one_hot=spec.one_hot)
