"""
Pydantic specifications for the clusterer and classifier of a pipeline.

Specs are frozen and reject unknown keys; they are echoed verbatim into
every fitted artifact so that a run can be reproduced from its outputs.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import (
    ClassifierDefaults,
    ClassifierKind,
    ClustererKind,
    ClusteringDefaults,
    InitStrategy,
    MixtureFamily,
)


class ClustererSpec(BaseModel):
    """Soft clustering backend and its hyperparameters."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ClustererKind = Field(default=ClustererKind.MIXTURE, description="Soft clustering backend")
    family: Optional[MixtureFamily] = Field(
        default=None,
        description="Mixture family; None picks gaussian-diag when p > 50 and gaussian-full otherwise",
    )
    init: InitStrategy = Field(default=InitStrategy.KMEANS_PP, description="EM initialization")
    tol: float = Field(default=ClusteringDefaults.EM_TOL.value, gt=0)
    max_iter: int = Field(default=ClusteringDefaults.EM_MAX_ITER.value, ge=1)
    n_restarts: int = Field(default=ClusteringDefaults.EM_RESTARTS.value, ge=1)
    variance_floor: float = Field(default=ClusteringDefaults.VARIANCE_FLOOR.value, gt=0)
    fuzziness: float = Field(default=ClusteringDefaults.FCM_FUZZINESS.value, gt=1.0, description="FCM exponent m")
    one_hot: bool = Field(
        default=False,
        description="Replace soft labels by one-hot argmax labels (hard clustering adapter)",
    )

    @model_validator(mode="after")
    def _family_only_for_mixtures(self) -> "ClustererSpec":
        if self.family is not None and self.kind != ClustererKind.MIXTURE:
            raise ValueError("family is only meaningful for kind='mixture'")
        return self


class ClassifierSpec(BaseModel):
    """Soft classifier fitted on cluster-labeled training data."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ClassifierKind = Field(default=ClassifierKind.MULTINOMIAL_LOGISTIC)
    random_features: int = Field(
        default=ClassifierDefaults.RANDOM_FEATURES.value,
        ge=0,
        description="Random Fourier feature count; 0 fits a linear model on the raw features",
    )
    bandwidth: Optional[float] = Field(
        default=None,
        gt=0,
        description="RBF bandwidth; None uses the median pairwise distance heuristic",
    )
    bandwidth_subsample: int = Field(default=ClassifierDefaults.BANDWIDTH_SUBSAMPLE.value, ge=2)
    ridge: float = Field(default=ClassifierDefaults.RIDGE.value, ge=0)
    tol: float = Field(default=ClassifierDefaults.GRAD_TOL.value, gt=0)
    max_iter: int = Field(default=ClassifierDefaults.MAX_ITER.value, ge=1)
    n_neighbors: int = Field(default=ClassifierDefaults.KNN_NEIGHBORS.value, ge=1)
