"""Structured logging with JSON support and a per-run correlation id."""
import functools
import json
import logging
import time
import uuid
from datetime import datetime, timezone
from typing import Optional

_RUN_ID: Optional[str] = None

# Record attributes copied into JSON entries when a call passes them via `extra`
EXTRA_FIELDS = ("experiment", "sweep_value", "stage", "attempt")


def get_run_id() -> str:
    global _RUN_ID
    if _RUN_ID is None:
        _RUN_ID = uuid.uuid4().hex[:8]
    return _RUN_ID


class JSONFormatter(logging.Formatter):
    """One JSON object per record: time, level, run id, message and any experiment fields."""

    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "run_id": get_run_id(),
            "message": record.getMessage(),
        }
        entry.update({key: getattr(record, key) for key in EXTRA_FIELDS if hasattr(record, key)})
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry)


def _install_run_id_factory() -> None:
    old_factory = logging.getLogRecordFactory()
    if getattr(old_factory, "_tapersim", False):
        return

    def record_factory(*args, **kwargs):
        record = old_factory(*args, **kwargs)
        record.run_id = get_run_id()
        return record

    record_factory._tapersim = True
    logging.setLogRecordFactory(record_factory)


def setup_logging(verbosity: int = 0, json_format: bool = False) -> None:
    """Configure the root logger.

    Args:
        verbosity: 0=WARNING, 1=INFO, 2+=DEBUG
        json_format: Use JSON formatter if True
    """
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)

    handler = logging.StreamHandler()
    if json_format:
        handler.setFormatter(JSONFormatter())
    else:
        handler.setFormatter(logging.Formatter(
            "%(asctime)s [%(levelname)s] [%(run_id)s] %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        ))
    _install_run_id_factory()

    root = logging.getLogger()
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(level)


def timed(func):
    """Log wall time at INFO; methods of experiments are tagged with the experiment name."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        elapsed = time.perf_counter() - start
        experiment = getattr(args[0], "name", None) if args else None
        if isinstance(experiment, str) and experiment:
            logging.info(f"[{experiment}] {func.__name__} took {elapsed:.2f}s", extra={"experiment": experiment})
        else:
            logging.info(f"{func.__name__} took {elapsed:.2f}s", extra={"stage": func.__name__})
        return result
    return wrapper
