"""
Error hierarchy and stage error handling for conformal clustering.

Uses Decorator pattern to wrap pipeline stages so that any failure surfaces
as a PipelineStageError naming the stage it happened in.
"""

from enum import Enum
from functools import wraps
from typing import Any, Callable, Dict, Optional

import numpy as np

from .logger import get_logger
from .metrics import get_metrics_collector


class ErrorSeverity(Enum):
    """Error severity levels."""
    FATAL = "fatal"
    RECOVERABLE = "recoverable"
    WARNING = "warning"


class ConformalClusteringError(Exception):
    """Base exception for conformal clustering errors."""

    def __init__(
        self,
        message: str,
        severity: ErrorSeverity = ErrorSeverity.FATAL,
        context: Optional[Dict[str, Any]] = None,
        original_error: Optional[Exception] = None
    ):
        super().__init__(message)
        self.message = message
        self.severity = severity
        self.context = context or {}
        self.original_error = original_error


class InvalidArgumentError(ConformalClusteringError, ValueError):
    """A documented precondition of an operation does not hold."""


class DegenerateFitError(ConformalClusteringError):
    """A mixture component collapsed during fitting."""

    def __init__(self, message: str, iteration: int, **kwargs):
        context = dict(kwargs.pop("context", None) or {})
        context["iteration"] = iteration
        super().__init__(message, severity=ErrorSeverity.RECOVERABLE, context=context, **kwargs)
        self.iteration = iteration


class NumericError(ConformalClusteringError):
    """Non-finite values appeared where finite ones are required."""


class UnsupportedSizeError(ConformalClusteringError):
    """An exhaustive computation was requested beyond its size limit."""


class DiagnosticsError(ConformalClusteringError):
    """Too many replications failed for a diagnostic to be reported."""


class DataIOError(ConformalClusteringError):
    """A data file or stored artifact could not be read or written."""


class PipelineStageError(ConformalClusteringError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, message: str, **kwargs):
        context = dict(kwargs.pop("context", None) or {})
        context["stage"] = stage
        super().__init__(f"[{stage}] {message}", context=context, **kwargs)
        self.stage = stage


def handle_stage_error(
    stage_name: str,
    context: Optional[Dict[str, Any]] = None
):
    """
    Decorator to handle errors in pipeline stages.

    Library errors are re-raised wrapped in PipelineStageError (the original
    stays reachable through ``original_error``); a PipelineStageError raised by
    a nested stage passes through untouched.

    Args:
        stage_name: Name of the stage
        context: Additional context for error logging

    Returns:
        Decorated function
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            logger = get_logger(stage_name)
            metrics = get_metrics_collector()
            error_context = dict(context or {})

            try:
                logger.start_stage(stage_name, error_context)
                metrics.start_stage(stage_name)
                result = func(*args, **kwargs)
                metrics.end_stage(stage_name, success=True)
                logger.end_stage(stage_name, success=True, context=error_context)
                return result
            except PipelineStageError:
                metrics.end_stage(stage_name, success=False)
                logger.end_stage(stage_name, success=False, context=error_context)
                raise
            except ConformalClusteringError as e:
                metrics.end_stage(stage_name, success=False)
                logger.error(
                    f"Error in {stage_name}: {e.message}",
                    context={**error_context, **e.context},
                    error=type(e).__name__
                )
                logger.end_stage(stage_name, success=False, context=error_context)
                raise PipelineStageError(
                    stage_name,
                    e.message,
                    severity=e.severity,
                    context={**error_context, **e.context},
                    original_error=e
                ) from e
            except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
                metrics.end_stage(stage_name, success=False)
                logger.error(
                    f"Unexpected error in {stage_name}: {str(e)}",
                    context=error_context,
                    error=str(e)
                )
                logger.end_stage(stage_name, success=False, context=error_context)
                raise PipelineStageError(
                    stage_name,
                    f"Unexpected error: {str(e)}",
                    severity=ErrorSeverity.FATAL,
                    context=error_context,
                    original_error=e
                ) from e

        return wrapper
    return decorator
