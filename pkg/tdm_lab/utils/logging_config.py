"""
Logging setup for TDM Lab.

Every module logs through ``logging.getLogger(__name__)``, so the whole
library hangs off the ``tdm_lab`` logger.  The CLI calls setup_logging()
once; worker processes that run seeds in parallel call
configure_worker_logging() as their pool initializer.

Educational Notes:
- Console output goes to stderr; stdout is reserved for reports
- Training logs one INFO line per evaluation point and per episode summary;
  per-update numbers stay at DEBUG
- Worker records carry the process name so interleaved seeds stay readable
"""

import logging
import sys
from pathlib import Path
from typing import Optional

PACKAGE_LOGGER = 'tdm_lab'

CONSOLE_FORMAT = '%(levelname)s: %(message)s'
FILE_FORMAT = '%(asctime)s %(levelname)-8s %(name)s:%(lineno)d  %(message)s'
WORKER_FORMAT = '%(levelname)s [%(processName)s]: %(message)s'
TIMESTAMP_FORMAT = '%Y-%m-%d %H:%M:%S'


def _handler(stream_or_path, fmt: str, level: int) -> logging.Handler:
    if isinstance(stream_or_path, Path):
        handler: logging.Handler = logging.FileHandler(stream_or_path, mode='a', encoding='utf-8')
    else:
        handler = logging.StreamHandler(stream_or_path)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt, TIMESTAMP_FORMAT))
    return handler


def setup_logging(
    level: int = logging.INFO,
    log_file: Optional[Path] = None,
    verbose: bool = False
) -> None:
    """
    Configure the root logger for a CLI invocation.

    Replaces any handlers left by a previous call, so tests and repeated
    main() calls do not duplicate output.

    Args:
        level: Threshold for console and file
        log_file: Optional file that receives every record in FILE_FORMAT
        verbose: Use FILE_FORMAT on the console too
    """
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(level)
    root.addHandler(_handler(sys.stderr, FILE_FORMAT if verbose else CONSOLE_FORMAT, level))

    if log_file:
        try:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            root.addHandler(_handler(Path(log_file), FILE_FORMAT, level))
            logging.getLogger(PACKAGE_LOGGER).info(f"Logging to file: {log_file}")
        except OSError as e:
            logging.getLogger(PACKAGE_LOGGER).error(f"Cannot open log file {log_file}: {e}")

    logging.getLogger(PACKAGE_LOGGER).setLevel(level)


def configure_worker_logging(level: int) -> None:
    """Pool initializer: stderr logging tagged with the worker's process name."""
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(level)
    root.addHandler(_handler(sys.stderr, WORKER_FORMAT, level))
    logging.getLogger(PACKAGE_LOGGER).setLevel(level)


def package_level() -> int:
    return logging.getLogger(PACKAGE_LOGGER).getEffectiveLevel()


class TemporaryLogLevel:
    """
    Raise (or lower) one logger's threshold inside a ``with`` block.

    The runner uses it to keep planner DEBUG output out of evaluation
    rollouts unless the run was started with --verbose.
    """

    def __init__(self, logger: logging.Logger, level: int):
        self.logger = logger
        self.level = level
        self._saved: Optional[int] = None

    def __enter__(self) -> logging.Logger:
        self._saved = self.logger.level
        self.logger.setLevel(self.level)
        return self.logger

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.logger.setLevel(self._saved)
        return False


def log_exception_details(logger: logging.Logger, exception: BaseException) -> None:
    """ERROR record with the exception type, message and traceback."""
    logger.error(f"{type(exception).__name__}: {exception}", exc_info=exception)
