import os
from enum import Enum
from typing import Any, Dict, Optional

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass


class RuntimeSettings(Enum):
    """Process-level defaults; each can be overridden by the matching env var."""
    LOG_LEVEL = "WARNING"
    OUTPUT_DIR = "./conformal_output"
    MAX_WORKERS = 1
    MLFLOW_TRACKING = False
    MLFLOW_TRACKING_URI = ""
    MLFLOW_EXPERIMENT_NAME = "conformal-clustering-simulations"


def _env_bool(name: str, default: bool) -> bool:
    return os.getenv(name, str(default)).strip().lower() in {"1", "true", "yes"}


class ConformalSettings:
    DEFAULT_CONFIG = {
        "logging": {
            "level": os.getenv("CONFORMAL_LOG_LEVEL", RuntimeSettings.LOG_LEVEL.value),
            "file": os.getenv("CONFORMAL_LOG_FILE") or None,
        },
        "output": {
            "base_dir": os.getenv("CONFORMAL_OUTPUT_DIR", RuntimeSettings.OUTPUT_DIR.value),
        },
        "processing": {
            "max_workers": int(os.getenv("CONFORMAL_MAX_WORKERS", RuntimeSettings.MAX_WORKERS.value)),
        },
        "mlflow": {
            "tracking": _env_bool("CONFORMAL_MLFLOW_TRACKING", RuntimeSettings.MLFLOW_TRACKING.value),
            "tracking_uri": os.getenv("MLFLOW_TRACKING_URI", RuntimeSettings.MLFLOW_TRACKING_URI.value) or None,
            "experiment_name": os.getenv(
                "CONFORMAL_MLFLOW_EXPERIMENT", RuntimeSettings.MLFLOW_EXPERIMENT_NAME.value
            ),
        },
    }

    def __init__(self, config_overrides: Optional[Dict[str, Any]] = None):
        self._config = {
            key: dict(value) if isinstance(value, dict) else value
            for key, value in self.DEFAULT_CONFIG.items()
        }
        if config_overrides:
            for key, value in config_overrides.items():
                if isinstance(value, dict) and isinstance(self._config.get(key), dict):
                    self._config[key].update(value)
                else:
                    self._config[key] = value

    def get(self, key: str, default=None) -> Any:
        return self._config.get(key, default)

    def get_nested(self, key_path: str, default=None) -> Any:
        current: Any = self._config
        for part in key_path.split("."):
            if isinstance(current, dict) and part in current:
                current = current[part]
            else:
                return default
        return current

    def is_mlflow_enabled(self) -> bool:
        return bool(self.get_nested("mlflow.tracking", False))

    def to_dict(self) -> Dict[str, Any]:
        return {k: dict(v) if isinstance(v, dict) else v for k, v in self._config.items()}


_settings_instance: Optional[ConformalSettings] = None


def get_settings() -> ConformalSettings:
    global _settings_instance
    if _settings_instance is None:
        _settings_instance = ConformalSettings()
    return _settings_instance
