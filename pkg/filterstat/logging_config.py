"""Logging configuration for filterstat."""

import logging
import os
import sys
from typing import Optional


def setup_logging(level: Optional[str] = None) -> None:
    """
    Configure logging for the command line tools.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
               Defaults to INFO, DEBUG if FILTERSTAT_DEBUG env var is set
    """
    if level is None:
        level = "DEBUG" if debug_enabled() else "INFO"

    log_level = getattr(logging, level.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(log_level)
    formatter = logging.Formatter(
        fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    )
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    root_logger.info(f"Logging configured at {level.upper()} level")


def debug_enabled() -> bool:
    """True when FILTERSTAT_DEBUG is set to a non-empty value."""
    return bool(os.getenv("FILTERSTAT_DEBUG"))
