"""Logging setup for CLI runs: console output plus an optional per-run log file."""

import logging
import sys
from pathlib import Path
from typing import Optional, Union

from thermopiezo.config.constants import LOG_DATE_FORMAT, LOG_FORMAT

BANNER_WIDTH = 70


def _level(name: str) -> int:
    return getattr(logging, name.upper(), logging.INFO)


def resolve_log_file(
    log_file: Optional[Union[str, Path]], out_dir: Optional[Path]
) -> Optional[Path]:
    """Relative log paths live inside the run's output directory."""
    if not log_file:
        return None
    path = Path(log_file)
    if not path.is_absolute() and out_dir is not None:
        path = out_dir / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def setup_logging(
    level: str = "INFO",
    log_file: Optional[Union[str, Path]] = None,
    quiet: bool = False,
    out_dir: Optional[Path] = None,
) -> Optional[Path]:
    """
    Configure the root logger for one CLI invocation.

    With ``quiet`` the console only shows warnings and errors while the log
    file, if any, still records everything at ``level``.

    Returns:
        The resolved log file path, or None when logging to the console only.
    """
    numeric_level = _level(level)
    console_level = max(numeric_level, logging.WARNING) if quiet else numeric_level
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT)

    root_logger = logging.getLogger()
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    path = resolve_log_file(log_file, out_dir)
    if path is not None:
        file_handler = logging.FileHandler(path)
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)
        root_logger.setLevel(numeric_level)
    else:
        root_logger.setLevel(console_level)

    # numpy/scipy RuntimeWarnings end up in the log instead of stderr
    logging.captureWarnings(True)

    logging.debug(f"Logging configured: level={level} quiet={quiet} file={path}")
    return path


def log_banner(logger: logging.Logger, title: str) -> None:
    """Log ``title`` between two rules of '='."""
    logger.info("=" * BANNER_WIDTH)
    logger.info(title)
    logger.info("=" * BANNER_WIDTH)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
