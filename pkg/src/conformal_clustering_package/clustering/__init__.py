from .fcm import FcmModel, fcm_membership, fit_fcm
from .mixture import FitLog, MixtureModel, fit_mixture_em, mixture_posterior
from .stochastic import (
    FittedClusterer,
    SoftLabelMatrix,
    fit_soft_clusterer,
    one_hot_soft_labels,
    sample_stochastic_labels,
)

__all__ = [
    "FcmModel",
    "fcm_membership",
    "fit_fcm",
    "FitLog",
    "MixtureModel",
    "fit_mixture_em",
    "mixture_posterior",
    "FittedClusterer",
    "SoftLabelMatrix",
    "fit_soft_clusterer",
    "one_hot_soft_labels",
    "sample_stochastic_labels",
]
