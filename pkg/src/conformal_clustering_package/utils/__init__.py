from .error_handler import (
    ConformalClusteringError,
    DataIOError,
    DegenerateFitError,
    DiagnosticsError,
    ErrorSeverity,
    InvalidArgumentError,
    NumericError,
    PipelineStageError,
    UnsupportedSizeError,
    handle_stage_error,
)
from .logger import LogLevel, configure_logging, get_logger
from .metrics import get_metrics_collector

__all__ = [
    "ConformalClusteringError",
    "DataIOError",
    "DegenerateFitError",
    "DiagnosticsError",
    "ErrorSeverity",
    "InvalidArgumentError",
    "NumericError",
    "PipelineStageError",
    "UnsupportedSizeError",
    "handle_stage_error",
    "LogLevel",
    "configure_logging",
    "get_logger",
    "get_metrics_collector",
]
