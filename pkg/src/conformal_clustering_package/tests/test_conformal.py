"""
Tests for APS scores, calibration thresholds, set constructions and the conformal pipelines.
"""

import math

import numpy as np
import pytest

from conformal_clustering_package.config.constants import ClassifierKind, ClustererKind, MixtureFamily, PipelineMode
from conformal_clustering_package.config.specs import ClassifierSpec, ClustererSpec
from conformal_clustering_package.conformal.pipeline import (
    ConformalPipeline,
    fit_conformal_pipeline,
    fit_cutoff_predictor,
    fit_split_conformal_classifier,
    load_pipeline,
    predict_sets,
    save_pipeline,
)
from conformal_clustering_package.conformal.scores import (
    aps_score,
    aps_score_matrix,
    calibration_threshold,
    cutoff_membership,
    cutoff_set,
    prediction_membership,
    prediction_set,
)
from conformal_clustering_package.core.types import Dataset, ProbVector
from conformal_clustering_package.utils.error_handler import InvalidArgumentError, PipelineStageError

CLUSTERER = ClustererSpec(kind=ClustererKind.MIXTURE, n_restarts=2)
CLASSIFIER = ClassifierSpec(random_features=0)


def test_aps_score_examples():
    pi = ProbVector([0.5, 0.3, 0.2])
    assert [aps_score(pi, y) for y in range(3)] == pytest.approx([0.0, 0.5, 0.8])
    uniform = ProbVector([1 / 3, 1 / 3, 1 / 3])
    assert [aps_score(uniform, y) for y in range(3)] == pytest.approx([0.0, 1 / 3, 2 / 3])


def test_aps_score_of_argmax_is_zero():
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(6), size=500)
    scores = aps_score_matrix(probs)
    assert np.all(scores[np.arange(500), np.argmax(probs, axis=1)] == 0.0)


@pytest.mark.parametrize("alpha,expected", [(0.1, 0.9), (0.5, 0.5), (0.05, math.inf)])
def test_calibration_threshold_examples(alpha, expected):
    scores = [0.1 * i for i in range(1, 10)]
    assert calibration_threshold(scores, alpha) == pytest.approx(expected)


def test_calibration_threshold_rejects_empty_scores_and_bad_alpha():
    with pytest.raises(InvalidArgumentError):
        calibration_threshold([], 0.1)
    with pytest.raises(InvalidArgumentError):
        calibration_threshold([0.1], 1.0)


def test_prediction_set_examples():
    pi = ProbVector([0.5, 0.3, 0.2])
    assert prediction_set(pi, 0.5).to_one_based() == [1, 2]
    assert prediction_set(pi, 0.0).to_one_based() == [1]
    assert prediction_set(pi, math.inf).to_one_based() == [1, 2, 3]
    assert prediction_set(pi, 0.5).format_members() == "1;2"


def test_cutoff_set_examples():
    assert cutoff_set(ProbVector([0.8, 0.05, 0.05, 0.05, 0.05]), 0.1).to_one_based() == [1, 2, 3]
    assert cutoff_set(ProbVector([0.8, 0.1, 0.1]), 0.1).to_one_based() == [1, 2]
    assert cutoff_set(ProbVector([0.0, 1.0, 0.0]), 0.3).size == 1


def test_set_invariants_over_random_inputs():
    rng = np.random.default_rng(42)
    probs = rng.dirichlet(np.full(4, 0.7), size=10_000)
    alphas = np.sort(rng.uniform(0.01, 0.99, size=(10_000, 2)), axis=1)
    scores = aps_score_matrix(probs)
    low = scores <= rng.uniform(0, 1, size=(10_000, 1))
    assert np.all(low[np.arange(10_000), np.argmax(probs, axis=1)])

    for chunk in np.array_split(np.arange(10_000), 10):
        alpha_small, alpha_large = alphas[chunk[0]]
        tight = cutoff_membership(probs[chunk], alpha_large)
        wide = cutoff_membership(probs[chunk], alpha_small)
        assert np.all(wide | ~tight)
        mass = np.sum(probs[chunk] * wide, axis=1)
        assert np.all(mass >= 1 - alpha_small - 1e-9)


def test_cutoff_removing_last_label_drops_below_level():
    rng = np.random.default_rng(8)
    for _ in range(300):
        gamma = ProbVector(rng.dirichlet(np.ones(5)))
        alpha = float(rng.uniform(0.02, 0.5))
        members = cutoff_set(gamma, alpha).members
        values = np.sort(gamma.entries[list(members)])[::-1]
        assert values.sum() >= 1 - alpha - 1e-9
        if len(values) > 1:
            assert values[:-1].sum() < 1 - alpha


def test_pipeline_on_separated_blobs(separated_data, separated_generator, seed):
    X, _ = separated_data
    pipeline = fit_conformal_pipeline(X, 3, 0.1, CLUSTERER, CLASSIFIER, PipelineMode.STOCHASTIC, seed)
    assert pipeline.threshold < 0.5
    sets = predict_sets(pipeline, Dataset(separated_generator.center_matrix()))
    assert [s.size for s in sets] == [1, 1, 1]
    assert pipeline.n_train == pipeline.n_calib == 150
    covered = np.mean(pipeline.calibration_scores <= pipeline.threshold)
    assert covered >= 1 - 0.1


def test_pipeline_threshold_overflow_gives_full_sets(separated_data, seed):
    X, _ = separated_data
    pipeline = fit_conformal_pipeline(X, 3, 0.005, CLUSTERER, CLASSIFIER, PipelineMode.STOCHASTIC, seed)
    assert pipeline.threshold == math.inf
    assert np.all(pipeline.predict_membership(X))


def test_pipeline_is_deterministic(separated_data, seed):
    X, _ = separated_data
    queries = np.random.default_rng(0).uniform(-25, 25, size=(50, 2))
    first = fit_conformal_pipeline(X, 3, 0.1, CLUSTERER, ClassifierSpec(random_features=32), PipelineMode.STOCHASTIC, seed)
    second = fit_conformal_pipeline(X, 3, 0.1, CLUSTERER, ClassifierSpec(random_features=32), PipelineMode.STOCHASTIC, seed)
    assert first.threshold == second.threshold
    assert first.alignment == second.alignment
    assert np.array_equal(first.predict_membership(queries), second.predict_membership(queries))


def test_recalibrated_sets_are_nested(separated_data, seed):
    X, _ = separated_data
    pipeline = fit_conformal_pipeline(X, 3, 0.05, CLUSTERER, CLASSIFIER, PipelineMode.NAIVE_HARD, seed)
    looser = pipeline.recalibrate(0.3)
    assert looser.threshold <= pipeline.threshold
    queries = np.random.default_rng(1).uniform(-25, 25, size=(200, 2))
    assert np.all(pipeline.predict_membership(queries) | ~looser.predict_membership(queries))


def test_pipeline_document_roundtrip(separated_data, seed, tmp_path):
    X, _ = separated_data
    pipeline = fit_conformal_pipeline(X, 3, 0.005, CLUSTERER, CLASSIFIER, PipelineMode.STOCHASTIC, seed)
    path = save_pipeline(pipeline, str(tmp_path / "pipeline.json"), "hash")
    assert '"threshold": "inf"' in (tmp_path / "pipeline.json").read_text()
    restored = load_pipeline(path)
    assert restored.to_dict() == pipeline.to_dict()


def test_pipeline_bypass_and_mode_checks(separated_data, seed):
    X, _ = separated_data
    pipeline = fit_conformal_pipeline(
        X, 3, 0.1, CLUSTERER, CLASSIFIER, PipelineMode.STOCHASTIC, seed, bypass_classifier=True
    )
    assert pipeline.classifier.kind == ClassifierKind.CLUSTERER_BYPASS
    with pytest.raises(InvalidArgumentError):
        fit_conformal_pipeline(X, 3, 0.1, CLUSTERER, CLASSIFIER, PipelineMode.ORACLE_LABELS, seed)
    with pytest.raises(InvalidArgumentError):
        fit_conformal_pipeline(Dataset(X.features[:5]), 3, 0.1, CLUSTERER, CLASSIFIER, PipelineMode.STOCHASTIC, seed)


def test_pipeline_stage_failure_names_stage(seed):
    X = Dataset(np.linspace(-6.0, -1.0, 40).reshape(-1, 2))
    spec = ClustererSpec(kind=ClustererKind.MIXTURE, family=MixtureFamily.GAMMA_INDEPENDENT)
    with pytest.raises(PipelineStageError) as excinfo:
        fit_conformal_pipeline(X, 2, 0.1, spec, CLASSIFIER, PipelineMode.STOCHASTIC, seed)
    assert excinfo.value.stage == "cluster_train"


def test_predict_sets_dimension_mismatch(separated_data, seed):
    X, _ = separated_data
    pipeline = fit_conformal_pipeline(X, 3, 0.1, CLUSTERER, CLASSIFIER, PipelineMode.STOCHASTIC, seed)
    with pytest.raises(InvalidArgumentError):
        predict_sets(pipeline, np.zeros((2, 3)))


def test_split_conformal_classifier_uses_identity(separated_data, seed):
    X, Y = separated_data
    pipeline = fit_split_conformal_classifier(X, Y, 3, 0.1, CLASSIFIER, seed)
    assert pipeline.alignment.is_identity()
    assert pipeline.mode == PipelineMode.ORACLE_LABELS
    assert isinstance(ConformalPipeline.from_dict(pipeline.to_dict()), ConformalPipeline)


def test_cutoff_predictor_sets(separated_data, separated_generator, seed):
    X, _ = separated_data
    predictor = fit_cutoff_predictor(X, 3, 0.1, CLUSTERER, seed)
    membership = predictor.predict_membership(separated_generator.center_matrix())
    assert membership.sum(axis=1).tolist() == [1, 1, 1]
    oracle = fit_cutoff_predictor(X, 3, 0.1, ClustererSpec(kind=ClustererKind.ORACLE), seed, oracle=separated_generator)
    assert np.all(oracle.predict_membership(X).sum(axis=1) >= 1)
