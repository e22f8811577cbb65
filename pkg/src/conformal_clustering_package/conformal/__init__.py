from .pipeline import (
    ConformalPipeline,
    CutoffPredictor,
    SetPredictor,
    fit_conformal_pipeline,
    fit_cutoff_predictor,
    fit_split_conformal_classifier,
    load_pipeline,
    predict_sets,
    save_pipeline,
)
from .scores import (
    ConfidenceSet,
    aps_score,
    aps_score_matrix,
    aps_scores_at,
    calibration_threshold,
    cutoff_membership,
    cutoff_set,
    prediction_membership,
    prediction_set,
)

__all__ = [
    "ConformalPipeline",
    "CutoffPredictor",
    "SetPredictor",
    "fit_conformal_pipeline",
    "fit_cutoff_predictor",
    "fit_split_conformal_classifier",
    "load_pipeline",
    "predict_sets",
    "save_pipeline",
    "ConfidenceSet",
    "aps_score",
    "aps_score_matrix",
    "aps_scores_at",
    "calibration_threshold",
    "cutoff_membership",
    "cutoff_set",
    "prediction_membership",
    "prediction_set",
]
