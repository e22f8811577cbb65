"""
CSV ingestion and export for datasets and labelings.

Datasets: header row, one observation per line, '.' decimal point.
Labelings: single-column CSV of 1-based integer labels.
Lines starting with '#' are provenance comments and are skipped.
"""

from typing import List, Optional

import numpy as np
import pandas as pd

from conformal_clustering_package.utils.error_handler import DataIOError, InvalidArgumentError
from conformal_clustering_package.utils.result_saver import save_frame

from .types import Dataset, Labeling


def _read_csv(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, comment="#", decimal=".", skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataIOError(f"Could not read CSV {path}: {e}", context={"path": path}, original_error=e) from e


def read_dataset_csv(path: str) -> Dataset:
    """
    Load a feature matrix from CSV.

    Raises:
        DataIOError: If the file is unreadable, has non-numeric or missing
            cells, or violates the Dataset invariants
    """
    frame = _read_csv(path)
    try:
        values = frame.apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise DataIOError(f"Non-numeric feature values in {path}", context={"path": path}, original_error=e) from e
    try:
        return Dataset(values)
    except InvalidArgumentError as e:
        raise DataIOError(f"Invalid dataset in {path}: {e.message}", context={"path": path}, original_error=e) from e


def read_labeling_csv(path: str, K: Optional[int] = None) -> Labeling:
    """
    Load 1-based labels from a single-column CSV.

    Args:
        path: CSV path
        K: Label alphabet size; defaults to the largest label present
    """
    frame = _read_csv(path)
    if frame.shape[1] != 1:
        raise DataIOError(f"Label file {path} must have exactly one column, found {frame.shape[1]}")
    column = pd.to_numeric(frame.iloc[:, 0], errors="coerce")
    if column.isna().any() or not np.all(np.equal(np.mod(column.to_numpy(), 1), 0)):
        raise DataIOError(f"Label file {path} must contain integers only", context={"path": path})
    labels = column.to_numpy(dtype=np.int64)
    if labels.size and labels.min() < 1:
        raise DataIOError(f"Labels in {path} must be 1-based", context={"path": path})
    alphabet = K if K is not None else int(labels.max(initial=1))
    try:
        return Labeling(labels - 1, alphabet)
    except InvalidArgumentError as e:
        raise DataIOError(f"Invalid labels in {path}: {e.message}", context={"path": path}, original_error=e) from e


def feature_column_names(p: int) -> List[str]:
    return [f"x{j + 1}" for j in range(p)]


def write_dataset_csv(dataset: Dataset, path: str, config_hash: Optional[str] = None) -> str:
    frame = pd.DataFrame(dataset.features, columns=feature_column_names(dataset.p))
    return save_frame(frame, path, config_hash)


def write_labeling_csv(labeling: Labeling, path: str, config_hash: Optional[str] = None) -> str:
    frame = pd.DataFrame({"label": labeling.labels + 1})
    return save_frame(frame, path, config_hash)
