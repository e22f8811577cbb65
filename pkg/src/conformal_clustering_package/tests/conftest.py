"""
Shared fixtures: seeds, small generated datasets and config writers.
"""

import json
import os

import numpy as np
import pytest

from conformal_clustering_package.config.constants import GeneratorFamily
from conformal_clustering_package.core.types import Dataset, Labeling, RandomSeed
from conformal_clustering_package.simulate.generators import GeneratorConfig, generate_mixture_data

# Recent mlflow releases refuse file-based tracking URIs unless this opt-out is set.
os.environ.setdefault("MLFLOW_ALLOW_FILE_STORE", "true")


@pytest.fixture
def seed() -> RandomSeed:
    return RandomSeed(20240917)


@pytest.fixture
def separated_generator() -> GeneratorConfig:
    """Three far-apart tight Gaussian blobs in the plane."""
    return GeneratorConfig(
        family=GeneratorFamily.GAUSSIAN,
        centers=[[0.0, 20.0], [-20.0, -10.0], [20.0, -10.0]],
        sigma2=0.25,
    )


@pytest.fixture
def separated_data(separated_generator, seed):
    return generate_mixture_data(separated_generator, 300, seed.derive("fixture-data"))


@pytest.fixture
def two_blobs_1d(seed):
    """Two 1-D clusters at -10 and +10 with standard deviation 0.5."""
    rng = seed.derive("two-blobs").generator()
    features = np.concatenate([rng.normal(-10.0, 0.5, 200), rng.normal(10.0, 0.5, 200)])
    labels = np.repeat([0, 1], 200)
    return Dataset(features.reshape(-1, 1)), Labeling(labels, 2)


@pytest.fixture
def write_config(tmp_path):
    """Write a JSON config into tmp_path and return its path."""
    def _write(name: str, payload: dict) -> str:
        path = os.path.join(str(tmp_path), name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f)
        return path

    return _write
