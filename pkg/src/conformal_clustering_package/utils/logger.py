"""
Structured logging for conformal clustering runs.

Uses Strategy pattern for different log output backends. Log lines go to
stderr so that command results printed on stdout stay machine-readable.
"""

import json
import os
import sys
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional


class LogLevel(Enum):
    DEBUG = 10
    INFO = 20
    WARNING = 30
    ERROR = 40

    @classmethod
    def from_name(cls, name: Optional[str], default: "LogLevel" = None) -> "LogLevel":
        """Parse a level name such as 'debug' or 'INFO'."""
        if not name:
            return default or cls.INFO
        try:
            return cls[name.strip().upper()]
        except KeyError:
            return default or cls.INFO


def _format_line(level: LogLevel, message: str, context: Dict[str, Any]) -> str:
    timestamp = datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")
    context_str = json.dumps(context, default=str, sort_keys=True) if context else "{}"
    return f"[{timestamp}] {level.name} - {message} | Context: {context_str}\n"


class LogHandler(ABC):
    """Output backend for log lines."""

    @abstractmethod
    def handle(self, level: LogLevel, message: str, context: Dict[str, Any]) -> None:
        """Write one formatted entry."""


class ConsoleLogHandler(LogHandler):
    """Console log handler writing to stderr."""

    def handle(self, level: LogLevel, message: str, context: Dict[str, Any]) -> None:
        sys.stderr.write(_format_line(level, message, context))
        sys.stderr.flush()


class FileLogHandler(LogHandler):
    """Append-only file log handler."""

    def __init__(self, filepath: str):
        self.filepath = filepath

    def handle(self, level: LogLevel, message: str, context: Dict[str, Any]) -> None:
        with open(self.filepath, "a", encoding="utf-8") as f:
            f.write(_format_line(level, message, context))


class Logger:
    """
    Level-filtered logger fanning out to its handlers.

    Every call accepts a context dictionary; the logger name is added to it
    under the ``component`` key.
    """

    def __init__(self, name: str, level: LogLevel = LogLevel.INFO, handlers: Optional[List[LogHandler]] = None):
        self.name = name
        self.level = level
        self.handlers = handlers or [ConsoleLogHandler()]

    def _log(self, level: LogLevel, message: str, context: Optional[Dict[str, Any]] = None):
        if level.value < self.level.value:
            return

        context = dict(context or {})
        context["component"] = self.name

        for handler in self.handlers:
            handler.handle(level, message, context)

    def debug(self, message: str, context: Optional[Dict[str, Any]] = None):
        self._log(LogLevel.DEBUG, message, context)

    def info(self, message: str, context: Optional[Dict[str, Any]] = None):
        self._log(LogLevel.INFO, message, context)

    def warning(self, message: str, context: Optional[Dict[str, Any]] = None):
        self._log(LogLevel.WARNING, message, context)

    def error(self, message: str, context: Optional[Dict[str, Any]] = None, error: Optional[str] = None):
        context = dict(context or {})
        if error:
            context["error"] = error
        self._log(LogLevel.ERROR, message, context)

    def start_stage(self, stage_name: str, context: Optional[Dict[str, Any]] = None):
        context = dict(context or {})
        context["stage"] = stage_name
        context["status"] = "start"
        self.debug(f"Starting {stage_name}", context)

    def end_stage(self, stage_name: str, success: bool = True, context: Optional[Dict[str, Any]] = None):
        """Failures are logged at WARNING, successes at DEBUG."""
        context = dict(context or {})
        context["stage"] = stage_name
        context["status"] = "success" if success else "failure"
        if success:
            self.debug(f"Completed {stage_name}", context)
        else:
            self.warning(f"Failed {stage_name}", context)


# one Logger per component name
_loggers: Dict[str, Logger] = {}
_default_level: Optional[LogLevel] = None
_default_handlers: Optional[List[LogHandler]] = None


def configure_logging(level: Optional[LogLevel] = None, log_file: Optional[str] = None) -> None:
    """
    Set the level and handlers used by every registered and future logger.

    Args:
        level: Minimum log level; falls back to ``CONFORMAL_LOG_LEVEL``
        log_file: Optional file that receives a copy of every line
    """
    global _default_level, _default_handlers
    _default_level = level or LogLevel.from_name(os.getenv("CONFORMAL_LOG_LEVEL"))
    _default_handlers = [ConsoleLogHandler()]
    if log_file:
        _default_handlers.append(FileLogHandler(log_file))
    for logger in _loggers.values():
        logger.level = _default_level
        logger.handlers = list(_default_handlers)


def get_logger(name: str, level: Optional[LogLevel] = None, handlers: Optional[List[LogHandler]] = None) -> Logger:
    """Return the registered logger for ``name``, creating it with the configured defaults."""
    if name not in _loggers:
        default_level = _default_level or LogLevel.from_name(os.getenv("CONFORMAL_LOG_LEVEL"))
        _loggers[name] = Logger(
            name,
            level or default_level,
            handlers or (list(_default_handlers) if _default_handlers else None),
        )
    return _loggers[name]
