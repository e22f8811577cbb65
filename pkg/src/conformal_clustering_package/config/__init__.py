from .config_validator import ConfigurationError, config_hash, load_json_config, validate_model
from .settings import ConformalSettings, get_settings
from .specs import ClassifierSpec, ClustererSpec

__all__ = [
    "ConfigurationError",
    "config_hash",
    "load_json_config",
    "validate_model",
    "ConformalSettings",
    "get_settings",
    "ClassifierSpec",
    "ClustererSpec",
]
