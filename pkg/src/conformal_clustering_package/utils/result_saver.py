"""
Result saving utilities for conformal clustering runs.

Every writer here goes through a temporary file in the destination directory
followed by an atomic rename, so an interrupted run never leaves a partially
written artifact behind.
"""

import json
import math
import os
import tempfile
from typing import Any, Dict, Optional

import pandas as pd

from .error_handler import DataIOError
from .logger import get_logger

FLOAT_FORMAT = "%.17g"


def atomic_write_text(path: str, text: str) -> str:
    """
    Write text to ``path`` atomically (write-then-rename).

    Args:
        path: Destination file path
        text: File contents

    Returns:
        Absolute path of the written file

    Raises:
        DataIOError: If the directory cannot be created or the write fails
    """
    target = os.path.abspath(path)
    directory = os.path.dirname(target) or "."
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp_path, target)
        except BaseException:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
    except OSError as e:
        raise DataIOError(f"Could not write {path}: {e}", context={"path": path}, original_error=e) from e
    return target


def _json_ready(value: Any) -> Any:
    """Replace non-finite floats by the strings 'inf' / '-inf' / 'nan'."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def dumps_json(payload: Dict[str, Any]) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_json_ready(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def provenance_block(config_hash: Optional[str]) -> Dict[str, Any]:
    from conformal_clustering_package import __version__

    return {"tool_version": __version__, "config_hash": config_hash}


def provenance_comment(config_hash: Optional[str]) -> str:
    from conformal_clustering_package import __version__

    return f"# conformal-clustering {__version__} config_sha256={config_hash or 'none'}\n"


def save_json(payload: Dict[str, Any], path: str, config_hash: Optional[str] = None) -> str:
    """
    Save a JSON document with an embedded provenance block.

    Args:
        payload: Document body
        path: Destination path
        config_hash: Hash of the configuration that produced the document

    Returns:
        Absolute path of the written file
    """
    document = dict(payload)
    document["provenance"] = provenance_block(config_hash)
    written = atomic_write_text(path, dumps_json(document))
    get_logger("result_saver").info("JSON saved", {"path": written})
    return written


def save_frame(frame: pd.DataFrame, path: str, config_hash: Optional[str] = None) -> str:
    """
    Save a pandas frame as CSV preceded by a provenance comment line.

    Args:
        frame: Table to save
        path: Destination path
        config_hash: Hash of the configuration that produced the table

    Returns:
        Absolute path of the written file
    """
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    written = atomic_write_text(path, provenance_comment(config_hash) + body)
    get_logger("result_saver").info("CSV saved", {"path": written, "rows": len(frame)})
    return written


def load_json(path: str) -> Dict[str, Any]:
    """
    Load a JSON document written by save_json.

    Raises:
        DataIOError: If the file is missing or is not valid JSON
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataIOError(f"Could not read JSON document {path}: {e}", context={"path": path}, original_error=e) from e


def parse_float(value: Any) -> float:
    """Inverse of the non-finite float encoding used by dumps_json."""
    return float(value)
