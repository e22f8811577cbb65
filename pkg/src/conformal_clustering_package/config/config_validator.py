"""
Configuration validation utilities.

Loads JSON config files, validates them against pydantic models and raises
ConfigurationError messages that name every offending field.
"""

import hashlib
import json
from typing import Any, Dict, Type, TypeVar

from pydantic import BaseModel, ValidationError

from conformal_clustering_package.utils.error_handler import ConformalClusteringError, DataIOError
from conformal_clustering_package.utils.logger import get_logger

logger = get_logger("config_validator")

ModelT = TypeVar("ModelT", bound=BaseModel)


class ConfigurationError(ConformalClusteringError):
    """Raised when a configuration file or override is invalid."""


def load_json_config(path: str) -> Dict[str, Any]:
    """
    Read a JSON config file.

    Args:
        path: Path to the JSON file

    Returns:
        Parsed top-level object

    Raises:
        DataIOError: If the file cannot be read
        ConfigurationError: If the file is not a JSON object
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise DataIOError(f"Could not read config file {path}: {e}", context={"path": path}, original_error=e) from e
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"Config file {path} is not valid JSON: {e}", context={"path": path}, original_error=e
        ) from e
    if not isinstance(payload, dict):
        raise ConfigurationError(f"Config file {path} must contain a JSON object", context={"path": path})
    return payload


def format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        lines.append(f"  - {location}: {item.get('msg')}")
    return "\n".join(lines)


def validate_model(model_cls: Type[ModelT], payload: Dict[str, Any]) -> ModelT:
    """
    Validate a payload against a pydantic model.

    Args:
        model_cls: Target model class
        payload: Raw configuration dictionary

    Returns:
        Validated model instance

    Raises:
        ConfigurationError: Listing each invalid field path
    """
    try:
        return model_cls.model_validate(payload)
    except ValidationError as e:
        details = format_validation_error(e)
        message = f"Invalid {model_cls.__name__} configuration:\n{details}"
        logger.error(message, {"model": model_cls.__name__})
        raise ConfigurationError(message, context={"model": model_cls.__name__}, original_error=e) from e


def config_hash(config: BaseModel) -> str:
    """SHA-256 of the canonical JSON dump of a validated config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
