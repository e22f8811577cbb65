from .sampling import (
    as_probability_matrix,
    categorical_from_uniforms,
    rank_matrix,
    sample_categorical,
    simplex_ranks,
    split_indices,
)
from .types import Dataset, Labeling, ProbVector, RandomSeed, SplitIndices

__all__ = [
    "Dataset",
    "Labeling",
    "ProbVector",
    "RandomSeed",
    "SplitIndices",
    "as_probability_matrix",
    "categorical_from_uniforms",
    "rank_matrix",
    "sample_categorical",
    "simplex_ranks",
    "split_indices",
]
