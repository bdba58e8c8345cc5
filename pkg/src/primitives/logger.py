"""
Logger Primitive

Structured JSON logging with levels, a component name and context.

Interface:
- debug(message: str, context: dict = {}) → None
- info(message: str, context: dict = {}) → None
- warning(message: str, context: dict = {}) → None
- error(message: str, context: dict = {}) → None
"""

import sys
from pathlib import Path
from typing import Optional

import numpy as np
import structlog

LEVELS = {"debug": 10, "info": 20, "warning": 30, "error": 40}


def _coerce_numpy(logger, method_name, event_dict):
    """Turn numpy scalars and small arrays into JSON-friendly values."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray) and value.size <= 16:
            event_dict[key] = value.tolist()
    return event_dict


class Logger:
    """Structured logger with ISO 8601 timestamps bound to a component name."""

    def __init__(
        self,
        component: str = "ldm",
        output_file: Optional[str] = None,
        level: str = "info",
    ):
        """
        Initialize logger.

        Args:
            component: Name bound to every event (e.g. "impes", "vae_training")
            output_file: Path to log file. If None, logs to stdout.
            level: Minimum level emitted (debug, info, warning, error)
        """
        self.component = component
        self.output_file = output_file
        self.level = level
        self._file_handle = None
        self._configure_structlog()

    def _configure_structlog(self):
        """Build a bound logger with its own processor chain and sink."""
        processors = [
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            _coerce_numpy,
            structlog.processors.JSONRenderer(),
        ]

        if self.output_file:
            log_path = Path(self.output_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            self._file_handle = open(self.output_file, "a", encoding="utf-8")
            sink = self._file_handle
        else:
            sink = sys.stdout

        self._logger = structlog.wrap_logger(
            structlog.PrintLogger(file=sink),
            processors=processors,
            wrapper_class=structlog.make_filtering_bound_logger(LEVELS.get(self.level, 20)),
            context_class=dict,
        ).bind(component=self.component)

    def _emit(self, level: str, message: str, context: Optional[dict]) -> None:
        getattr(self._logger, level)(message, **(context or {}))

    def debug(self, message: str, context: Optional[dict] = None) -> None:
        self._emit("debug", message, context)

    def info(self, message: str, context: Optional[dict] = None) -> None:
        self._emit("info", message, context)

    def warning(self, message: str, context: Optional[dict] = None) -> None:
        self._emit("warning", message, context)

    def error(self, message: str, context: Optional[dict] = None) -> None:
        self._emit("error", message, context)

    def close(self) -> None:
        if self._file_handle is not None:
            self._file_handle.close()
            self._file_handle = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
        return False
