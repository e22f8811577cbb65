"""
Foundational value types shared by every module.

Labels are 0-based integer indices inside the library; the I/O layer converts
to and from the 1-based labels used in files and on the command line.
"""

import hashlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from conformal_clustering_package.config.constants import ProbabilityTolerance
from conformal_clustering_package.utils.error_handler import InvalidArgumentError

ArrayLike = Union[Sequence[float], np.ndarray]

_STREAM_MASK = (1 << 64) - 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def normalize_probability_rows(values: ArrayLike) -> np.ndarray:
    """
    Validate rows of a probability matrix and renormalize small sum drift.

    Args:
        values: 1-D vector or 2-D matrix whose rows should lie on the simplex

    Returns:
        Float array of the same shape with rows summing to 1

    Raises:
        InvalidArgumentError: On non-finite or negative entries, or a row sum
            further than the renormalization tolerance from 1
    """
    probs = np.array(values, dtype=float)
    if probs.ndim not in (1, 2) or probs.shape[-1] < 1:
        raise InvalidArgumentError(f"Probability rows must be a non-empty vector or matrix, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)):
        raise InvalidArgumentError("Probability entries must be finite")
    if np.any(probs < -ProbabilityTolerance.NEGATIVE_CLIP.value):
        raise InvalidArgumentError("Probability entries must be nonnegative")
    probs = np.clip(probs, 0.0, None)
    sums = probs.sum(axis=-1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > ProbabilityTolerance.RENORMALIZE.value):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise InvalidArgumentError(f"Probability rows must sum to 1 (largest deviation {worst:.3g})")
    probs = probs / sums
    return np.minimum(probs, 1.0)


@dataclass(frozen=True)
class ProbVector:
    """A point on the K-simplex: a soft cluster label or classifier output."""
    entries: np.ndarray

    def __post_init__(self):
        probs = normalize_probability_rows(self.entries)
        if probs.ndim != 1:
            raise InvalidArgumentError("ProbVector entries must be one-dimensional")
        object.__setattr__(self, "entries", _frozen(probs))

    @property
    def K(self) -> int:
        return int(self.entries.shape[0])

    def argmax(self) -> int:
        """Index of the largest entry; ties go to the smallest index."""
        return int(np.argmax(self.entries))

    def __len__(self) -> int:
        return self.K

    def __iter__(self):
        return iter(self.entries.tolist())


@dataclass(frozen=True)
class Dataset:
    """n feature vectors in R^p, stored as an (n, p) float matrix."""
    features: np.ndarray

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise InvalidArgumentError(f"Dataset features must be a matrix, got shape {features.shape}")
        if features.shape[0] < 1 or features.shape[1] < 1:
            raise InvalidArgumentError("Dataset must have n >= 1 rows and p >= 1 columns")
        if not np.all(np.isfinite(features)):
            raise InvalidArgumentError("Dataset entries must be finite")
        object.__setattr__(self, "features", _frozen(features))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def p(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.features[np.asarray(indices, dtype=int)])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class Labeling:
    """Cluster indices in {0, ..., K-1} for n observations."""
    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.array(self.labels)
        if labels.ndim != 1:
            raise InvalidArgumentError("Labeling must be one-dimensional")
        if labels.size and not np.all(np.equal(np.mod(labels, 1), 0)):
            raise InvalidArgumentError("Labels must be integers")
        labels = labels.astype(np.int64)
        if self.K < 1:
            raise InvalidArgumentError(f"Label alphabet size must be >= 1, got {self.K}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise InvalidArgumentError(f"Labels must lie in [0, {self.K - 1}]")
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, indices: np.ndarray) -> "Labeling":
        return Labeling(self.labels[np.asarray(indices, dtype=int)], self.K)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint, exhaustive, nonempty train / calibration index sets."""
    train: np.ndarray
    calib: np.ndarray

    def __post_init__(self):
        train = np.array(self.train, dtype=np.int64)
        calib = np.array(self.calib, dtype=np.int64)
        if train.size == 0 or calib.size == 0:
            raise InvalidArgumentError("Both split parts must be nonempty")
        if np.intersect1d(train, calib).size:
            raise InvalidArgumentError("Split parts must be disjoint")
        object.__setattr__(self, "train", _frozen(train))
        object.__setattr__(self, "calib", _frozen(calib))


@dataclass(frozen=True)
class RandomSeed:
    """
    Reproducibility handle: (seed, stream) fully determines every draw.

    Generators are counter-based (Philox) keyed on the pair, so distinct
    streams of the same seed are independent and any stream can be
    re-created in isolation, e.g. inside a worker process.
    """
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 0 or value > _STREAM_MASK:
                raise InvalidArgumentError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", int(self.stream))

    def generator(self) -> np.random.Generator:
        key = (self.stream << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, *labels: Union[str, int]) -> "RandomSeed":
        """Sub-stream identified by a path of labels, e.g. derive('rep', 3)."""
        digest = hashlib.blake2b(digest_size=8)
        digest.update(self.stream.to_bytes(8, "little"))
        for label in labels:
            digest.update(b"\x1f")
            digest.update(str(label).encode("utf-8"))
        return RandomSeed(self.seed, int.from_bytes(digest.digest(), "little"))

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stream": self.stream}
