"""
Tests for the soft classifiers: logistic over random features, knn-soft and the clusterer bypass.
"""

import numpy as np
import pytest

from conformal_clustering_package.classify import (
    KnnSoftClassifier,
    LogisticClassifier,
    classifier_from_dict,
    classifier_to_dict,
    fit_soft_classifier,
    hard_rule,
    hard_rule_labels,
    predict_proba,
    predict_proba_matrix,
)
from conformal_clustering_package.classify.logistic import _objective
from conformal_clustering_package.clustering.stochastic import fit_soft_clusterer
from conformal_clustering_package.config.constants import ClassifierKind, ClustererKind, GeneratorFamily
from conformal_clustering_package.config.specs import ClassifierSpec, ClustererSpec
from conformal_clustering_package.core.types import Dataset, Labeling
from conformal_clustering_package.simulate.generators import GeneratorConfig, generate_mixture_data
from conformal_clustering_package.utils.error_handler import InvalidArgumentError

LINEAR = ClassifierSpec(kind=ClassifierKind.MULTINOMIAL_LOGISTIC, random_features=0)


def _two_separated_classes(seed):
    rng = seed.derive("separable").generator()
    features = np.vstack([rng.normal([-3.0, 0.0], 0.5, size=(60, 2)), rng.normal([3.0, 0.0], 0.5, size=(60, 2))])
    return Dataset(features), Labeling(np.repeat([0, 1], 60), 2)


def test_logistic_separable_training_accuracy(seed):
    X, Y = _two_separated_classes(seed)
    for spec in (LINEAR, ClassifierSpec(random_features=128)):
        model = fit_soft_classifier(X, Y, 2, spec, seed)
        assert np.array_equal(hard_rule_labels(model, X).labels, Y.labels)


def test_logistic_constant_labels(seed):
    X = Dataset(seed.generator().normal(size=(40, 2)))
    model = fit_soft_classifier(X, Labeling(np.zeros(40, dtype=int), 2), 2, LINEAR, seed)
    assert np.all(predict_proba_matrix(model, X)[:, 0] >= 1 - 1e-3)


def test_logistic_is_deterministic(seed):
    X, Y = _two_separated_classes(seed)
    spec = ClassifierSpec(random_features=32)
    first = fit_soft_classifier(X, Y, 2, spec, seed)
    second = fit_soft_classifier(X, Y, 2, spec, seed)
    assert np.array_equal(first.weights, second.weights)
    assert np.array_equal(first.feature_map.frequencies, second.feature_map.frequencies)


def test_logistic_training_reduces_loss(seed):
    X, Y = _two_separated_classes(seed)
    model = fit_soft_classifier(X, Y, 2, LINEAR, seed)
    design = model.design(X.features)
    targets = np.eye(2)[Y.labels]
    start, _ = _objective(design, targets, np.zeros_like(model.weights), LINEAR.ridge)
    fitted, _ = _objective(design, targets, model.weights, LINEAR.ridge)
    assert fitted < start



def test_linear_logistic_recovers_posterior_of_offset_mixture(seed):
    # equal spherical Gaussians: the true posterior is a softmax of affine functions
    cfg = GeneratorConfig(family=GeneratorFamily.GAUSSIAN, centers=[[8.0, 8.0], [10.0, 8.0]], sigma2=1.0)
    X, Y = generate_mixture_data(cfg, 4000, seed.derive("train"))
    X_test, _ = generate_mixture_data(cfg, 300, seed.derive("test"))
    model = fit_soft_classifier(X, Y, 2, LINEAR, seed)
    error = np.abs(predict_proba_matrix(model, X_test)[:, 0] - cfg.posterior_matrix(X_test.features)[:, 0])
    assert error.mean() < 0.03
    assert error.max() < 0.1


def test_linear_logistic_is_shift_invariant(seed):
    cfg = GeneratorConfig(family=GeneratorFamily.GAUSSIAN, centers=[[0.0, 0.0], [2.0, 0.0]], sigma2=1.0)
    X, Y = generate_mixture_data(cfg, 500, seed)
    shifted = Dataset(X.features + 100.0)
    model = fit_soft_classifier(X, Y, 2, LINEAR, seed)
    model_shifted = fit_soft_classifier(shifted, Y, 2, LINEAR, seed)
    np.testing.assert_allclose(
        predict_proba_matrix(model_shifted, shifted), predict_proba_matrix(model, X), atol=1e-4
    )


def test_zero_weights_give_uniform_probabilities():
    model = LogisticClassifier(np.zeros((3, 4)), n_inputs=2)
    assert np.allclose(predict_proba(model, [1.0, -2.0]).entries, 0.25)
    assert hard_rule(model, [1.0, -2.0]) == 0


def test_hard_rule_invariant_under_monotone_score_transforms(seed):
    rng = seed.generator()
    model = LogisticClassifier(rng.normal(size=(3, 4)), n_inputs=2)
    X = rng.normal(size=(200, 2))
    scores = model.decision_scores(X)
    expected = np.argmax(scores, axis=1)
    assert np.array_equal(hard_rule_labels(model, Dataset(X)).labels, expected)
    for transform in (np.tanh, np.exp, lambda s: 3.0 * s ** 3 + s):
        assert np.array_equal(np.argmax(transform(scores), axis=1), expected)


def test_knn_exact_training_point_probability():
    model = KnnSoftClassifier(np.array([[0.0], [5.0], [10.0]]), np.array([0, 1, 2]), 3, n_neighbors=1)
    proba = predict_proba(model, [5.0]).entries
    assert proba[1] == pytest.approx((1 + 1 / 3) / 2)
    assert proba.sum() == pytest.approx(1.0)


def test_knn_full_neighborhood_predicts_global_frequencies(seed):
    X = Dataset(seed.generator().normal(size=(10, 2)))
    Y = Labeling(np.array([0, 0, 0, 1, 1, 2, 2, 2, 2, 2]), 3)
    model = fit_soft_classifier(X, Y, 3, ClassifierSpec(kind=ClassifierKind.KNN_SOFT, n_neighbors=10), seed)
    expected = (np.array([3, 2, 5]) + 1 / 3) / 11
    for x in seed.derive("query").generator().normal(size=(5, 2)):
        assert np.allclose(predict_proba(model, x).entries, expected)


def test_knn_caps_neighbors_at_training_size(seed):
    X = Dataset([[0.0], [1.0]])
    model = fit_soft_classifier(X, Labeling([0, 1], 2), 2, ClassifierSpec(kind=ClassifierKind.KNN_SOFT, n_neighbors=15), seed)
    assert model.n_neighbors == 2


def test_classifier_outputs_valid_for_fuzzed_inputs(seed):
    X, Y = _two_separated_classes(seed)
    rng = seed.derive("fuzz").generator()
    queries = rng.normal(scale=1e4, size=(300, 2))
    for spec in (LINEAR, ClassifierSpec(random_features=16), ClassifierSpec(kind=ClassifierKind.KNN_SOFT)):
        proba = fit_soft_classifier(X, Y, 2, spec, seed).predict_proba_matrix(queries)
        assert np.all((proba >= 0) & (proba <= 1))
        assert np.allclose(proba.sum(axis=1), 1.0)


def test_fit_soft_classifier_rejects_bad_inputs(seed):
    X = Dataset([[0.0], [1.0]])
    with pytest.raises(InvalidArgumentError):
        fit_soft_classifier(X, Labeling([0], 2), 2, LINEAR, seed)
    with pytest.raises(InvalidArgumentError):
        fit_soft_classifier(X, Labeling([0, 1], 2), 2, ClassifierSpec(kind=ClassifierKind.CLUSTERER_BYPASS), seed)
    model = fit_soft_classifier(X, Labeling([0, 1], 2), 2, LINEAR, seed)
    with pytest.raises(InvalidArgumentError):
        model.predict_proba_matrix(np.zeros((1, 3)))


def test_bypass_uses_clusterer_soft_labels(separated_data, seed):
    X, _ = separated_data
    clusterer = fit_soft_clusterer(X, 3, ClustererSpec(kind=ClustererKind.FCM), seed)
    model = fit_soft_classifier(
        X, clusterer.soft_labels(X).argmax_labels(), 3, ClassifierSpec(kind=ClassifierKind.CLUSTERER_BYPASS), seed, clusterer
    )
    assert np.allclose(model.predict_proba_matrix(X.features), clusterer.soft_labels(X).rows)


def test_classifier_documents_roundtrip(separated_data, seed):
    X, Y = separated_data
    for spec in (ClassifierSpec(random_features=8), ClassifierSpec(kind=ClassifierKind.KNN_SOFT, n_neighbors=5)):
        model = fit_soft_classifier(X, Y, 3, spec, seed)
        restored = classifier_from_dict(classifier_to_dict(model))
        assert np.array_equal(restored.predict_proba_matrix(X.features), model.predict_proba_matrix(X.features))
