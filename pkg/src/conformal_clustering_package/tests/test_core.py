"""
Tests for core types, splitting, categorical sampling, simplex ranks and CSV I/O.
"""

import numpy as np
import pytest

from conformal_clustering_package.core.data_io import (
    read_dataset_csv,
    read_labeling_csv,
    write_dataset_csv,
    write_labeling_csv,
)
from conformal_clustering_package.core.sampling import (
    categorical_from_uniforms,
    sample_categorical,
    simplex_ranks,
    split_indices,
)
from conformal_clustering_package.core.types import Dataset, Labeling, ProbVector, RandomSeed
from conformal_clustering_package.utils.error_handler import DataIOError, InvalidArgumentError


def test_prob_vector_renormalizes_small_drift():
    p = ProbVector([0.5, 0.5 + 5e-7])
    assert abs(p.entries.sum() - 1.0) < 1e-12


def test_prob_vector_rejects_large_drift_and_negatives():
    with pytest.raises(InvalidArgumentError):
        ProbVector([0.5, 0.6])
    with pytest.raises(InvalidArgumentError):
        ProbVector([1.5, -0.5])


def test_dataset_and_labeling_invariants():
    with pytest.raises(InvalidArgumentError):
        Dataset([[1.0, np.nan]])
    with pytest.raises(InvalidArgumentError):
        Labeling([0, 3], 3)
    assert Dataset([1.0, 2.0, 3.0]).p == 1


def test_split_indices_partition_and_determinism(seed):
    split = split_indices(4, 0.5, seed)
    assert sorted(np.concatenate([split.train, split.calib]).tolist()) == [0, 1, 2, 3]
    assert len(split.train) == 2
    again = split_indices(4, 0.5, seed)
    assert np.array_equal(split.train, again.train)


def test_split_indices_half_of_thousand(seed):
    split = split_indices(1000, 0.5, seed)
    assert len(split.train) == len(split.calib) == 500


@pytest.mark.parametrize("n,fraction", [(1, 0.5), (2, 0.1), (10, 1.0)])
def test_split_indices_rejects_empty_parts(n, fraction, seed):
    with pytest.raises(InvalidArgumentError):
        split_indices(n, fraction, seed)


def test_split_indices_property_over_random_inputs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 60))
        fraction = float(rng.uniform(0.05, 0.95))
        n_train = int(np.floor(fraction * n + 0.5))
        if n_train < 1 or n_train > n - 1:
            continue
        split = split_indices(n, fraction, RandomSeed(int(rng.integers(0, 2 ** 63))))
        assert np.intersect1d(split.train, split.calib).size == 0
        assert len(split.train) + len(split.calib) == n


def test_sample_categorical_degenerate(seed):
    for i in range(20):
        assert sample_categorical(ProbVector([0.0, 1.0, 0.0]), seed.derive(i)) == 1


def test_sample_categorical_streams_reproducible(seed):
    p = ProbVector([0.5, 0.5])
    draws_a = [sample_categorical(p, seed.derive("s", i)) for i in range(64)]
    draws_b = [sample_categorical(p, seed.derive("s", i)) for i in range(64)]
    assert draws_a == draws_b
    assert 0 < sum(draws_a) < 64


def test_categorical_frequencies_match_probabilities(seed):
    probs = np.array([0.2, 0.3, 0.5])
    uniforms = seed.generator().random(100_000)
    labels = categorical_from_uniforms(np.broadcast_to(probs, (100_000, 3)), uniforms)
    frequencies = np.bincount(labels, minlength=3) / 100_000
    assert np.all(np.abs(frequencies - probs) < 0.01)


def test_categorical_never_returns_zero_probability_label():
    probs = np.array([[0.5, 0.0, 0.5], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    uniforms = np.array([0.5, 0.999999999, 0.999999999])
    labels = categorical_from_uniforms(probs, uniforms)
    assert probs[np.arange(3), labels].min() > 0


def test_simplex_ranks_examples():
    values, ranks = simplex_ranks(ProbVector([0.2, 0.5, 0.3]))
    assert np.allclose(values, [0.5, 0.3, 0.2])
    assert ranks.tolist() == [2, 0, 1]
    _, ranks = simplex_ranks(ProbVector([0.5, 0.5]))
    assert ranks.tolist() == [0, 1]


def test_simplex_ranks_reproduce_sorted_order():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = ProbVector(rng.dirichlet(np.ones(5)))
        values, ranks = simplex_ranks(p)
        reordered = np.empty(5)
        reordered[ranks] = p.entries
        assert np.array_equal(reordered, values)


def test_random_seed_derive_is_stable_and_distinct(seed):
    assert seed.derive("a", 1) == seed.derive("a", 1)
    assert seed.derive("a", 1).stream != seed.derive("a", 2).stream
    with pytest.raises(InvalidArgumentError):
        RandomSeed(-1)


def test_csv_roundtrip_uses_one_based_labels(tmp_path):
    features = Dataset([[0.1, 2.5], [3.0, -1.25]])
    labels = Labeling([0, 2], 3)
    write_dataset_csv(features, str(tmp_path / "x.csv"), "abc")
    write_labeling_csv(labels, str(tmp_path / "y.csv"), "abc")
    assert (tmp_path / "y.csv").read_text().splitlines()[1:] == ["label", "1", "3"]
    assert np.array_equal(read_dataset_csv(str(tmp_path / "x.csv")).features, features.features)
    assert read_labeling_csv(str(tmp_path / "y.csv"), 3).labels.tolist() == [0, 2]


def test_read_dataset_csv_errors(tmp_path):
    with pytest.raises(DataIOError):
        read_dataset_csv(str(tmp_path / "missing.csv"))
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2\n1.0,abc\n")
    with pytest.raises(DataIOError):
        read_dataset_csv(str(bad))
