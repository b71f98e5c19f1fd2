import logging
import json
import sys
import uuid
from contextvars import ContextVar
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Dict, Any

# Context variable for the id of the trajectory / solver task being processed
run_id: ContextVar[Optional[str]] = ContextVar('run_id', default=None)

PROJECT_NAMESPACE = "bivirus_hoi"


class StructuredFormatter(logging.Formatter):
    """Formatter for structured JSON logging"""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "run_id": run_id.get(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        if hasattr(record, 'extra_fields'):
            log_entry.update(record.extra_fields)

        return json.dumps(log_entry, ensure_ascii=False, default=str)


class ColoredFormatter(logging.Formatter):
    """Colored formatter for console output"""

    COLORS = {
        'DEBUG': '\033[36m',    # Cyan
        'INFO': '\033[32m',     # Green
        'WARNING': '\033[33m',  # Yellow
        'ERROR': '\033[31m',    # Red
        'CRITICAL': '\033[35m', # Magenta
        'RESET': '\033[0m'
    }

    def format(self, record: logging.LogRecord) -> str:
        original = record.levelname
        if original in self.COLORS:
            record.levelname = f"{self.COLORS[original]}{original}{self.COLORS['RESET']}"
        try:
            formatted = super().format(record)
        finally:
            record.levelname = original

        rid = run_id.get()
        if rid:
            formatted += f" [run: {rid}]"
        if hasattr(record, 'extra_fields'):
            fields = " ".join(f"{k}={v}" for k, v in record.extra_fields.items())
            formatted += f" {{{fields}}}"

        return formatted


class RunIdFilter(logging.Filter):
    """Filter to add the run id to log records"""

    def filter(self, record: logging.LogRecord) -> bool:
        rid = run_id.get()
        if rid:
            record.run_id = rid
        return True


class _ThirdPartyFilter(logging.Filter):
    """Blocks records from non-project loggers below WARNING level."""

    def filter(self, record: logging.LogRecord) -> bool:
        if record.name.startswith(PROJECT_NAMESPACE):
            return True
        return record.levelno >= logging.WARNING


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    json_format: bool = False,
    console_output: bool = True,
    hide_third_party: bool = True
) -> None:
    """
    Setup logging configuration for the CLI

    Console output goes to stderr: stdout carries CSV and JSON reports.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional file path for logging
        json_format: Whether to use JSON structured logging
        console_output: Whether to output to console
        hide_third_party: Suppress non-project records below WARNING
    """
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper()))

    root_logger.handlers.clear()
    for existing in list(root_logger.filters):
        if isinstance(existing, _ThirdPartyFilter):
            root_logger.removeFilter(existing)

    if json_format:
        formatter: logging.Formatter = StructuredFormatter()
    else:
        formatter = ColoredFormatter(
            '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s'
        )

    handlers: list[logging.Handler] = []
    if console_output:
        handlers.append(logging.StreamHandler(sys.stderr))
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    for handler in handlers:
        handler.setFormatter(formatter)
        handler.addFilter(RunIdFilter())
        if hide_third_party:
            handler.addFilter(_ThirdPartyFilter())
        root_logger.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger with the specified name

    Args:
        name: Logger name (usually module name)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)


def set_run_id(rid: Optional[str] = None) -> str:
    """
    Set the run id for the current context

    Args:
        rid: Optional run id, generates a new one if not provided

    Returns:
        The run id that was set
    """
    if rid is None:
        rid = uuid.uuid4().hex[:8]
    run_id.set(rid)
    return rid


def get_run_id() -> Optional[str]:
    """Get current run id"""
    return run_id.get()


def clear_run_id() -> None:
    """Clear current run id"""
    run_id.set(None)


def log_with_context(
    logger: logging.Logger,
    level: str,
    message: str,
    extra_fields: Optional[Dict[str, Any]] = None,
    **kwargs
) -> None:
    """
    Log message with additional context fields

    Args:
        logger: Logger instance
        level: Log level
        message: Log message
        extra_fields: Additional fields to include in log
        **kwargs: Additional fields, merged into extra_fields
    """
    levelno = getattr(logging, level.upper())
    if not logger.isEnabledFor(levelno):
        return

    fields = dict(extra_fields or {})
    fields.update(kwargs)
    logger.log(levelno, message, extra={"extra_fields": fields} if fields else None, stacklevel=2)


class RunContext:
    """Context manager for the run id"""

    def __init__(self, rid: Optional[str] = None):
        self.rid = rid
        self.previous_rid: Optional[str] = None

    def __enter__(self) -> str:
        self.previous_rid = get_run_id()
        return set_run_id(self.rid)

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.previous_rid:
            set_run_id(self.previous_rid)
        else:
            clear_run_id()
