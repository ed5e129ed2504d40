"""Utility functions for TDM Lab: logging setup, validation guards, CSV output."""

from tdm_lab.utils.csv_writer import write_frame, write_rows
from tdm_lab.utils.logging_config import (
    TemporaryLogLevel,
    configure_worker_logging,
    log_exception_details,
    setup_logging,
)
from tdm_lab.utils.validation import (
    check_all_finite,
    check_dim,
    check_finite,
    check_range,
    check_same_shape,
    validate_file_exists,
)

__all__ = [
    'setup_logging',
    'configure_worker_logging',
    'TemporaryLogLevel',
    'log_exception_details',
    'check_dim',
    'check_same_shape',
    'check_finite',
    'check_all_finite',
    'check_range',
    'validate_file_exists',
    'write_frame',
    'write_rows',
]
