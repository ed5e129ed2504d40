"""
Validation guards for TDM Lab.

Every numeric boundary of the library (network inputs, optimizer steps,
replay storage, environment actions) passes through these helpers so that
shape problems and non-finite values fail early with a precise message.

Design Pattern: Guard Pattern
Purpose: Validate preconditions before proceeding with operations
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np

from tdm_lab.core.models import ConfigError, NumericHealthError, ShapeError

logger = logging.getLogger(__name__)


# ============================================================================
# Shape Guards
# ============================================================================

def check_dim(actual: int, expected: int, what: str) -> None:
    """
    Validate that a dimension matches.

    Args:
        actual: Dimension found on the input
        expected: Dimension the consumer requires
        what: Name used in the error message

    Raises:
        ShapeError: Naming both dimensions
    """
    if int(actual) != int(expected):
        raise ShapeError(f"{what}: expected dimension {expected}, got {actual}")


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    """Raise ShapeError unless both arrays have identical shapes."""
    if np.shape(a) != np.shape(b):
        raise ShapeError(f"{what}: shape {np.shape(a)} does not match {np.shape(b)}")


# ============================================================================
# Numeric Health Guards
# ============================================================================

def check_finite(
    values: Any,
    what: str,
    context: Optional[Dict[str, Any]] = None
) -> None:
    """
    Validate that every entry is finite.

    Educational Note:
    A single NaN in a gradient silently poisons every parameter after the
    next optimizer step, so the check happens before the update, not after.

    Args:
        values: Scalar or array-like to check
        what: Name used in the error message
        context: Optional diagnostics attached to the raised error

    Raises:
        NumericHealthError: If any entry is NaN or infinite
    """
    arr = np.asarray(values, dtype=float)
    if np.all(np.isfinite(arr)):
        return

    bad = np.argwhere(~np.isfinite(arr))
    first = tuple(int(i) for i in bad[0]) if bad.size else ()
    details = dict(context or {})
    details.setdefault('first_bad_index', first)
    logger.debug(f"Non-finite entries in {what}: {len(bad)} bad values")
    raise NumericHealthError(f"non-finite values in {what}", details)


def check_all_finite(arrays: Sequence[np.ndarray], what: str) -> None:
    """Run check_finite over a sequence of arrays, naming the offending position."""
    for index, arr in enumerate(arrays):
        check_finite(arr, f"{what}[{index}]")


# ============================================================================
# File and Value Guards
# ============================================================================

def validate_file_exists(file_path: Path, what: str = "file") -> Path:
    """
    Validate that a file exists and is readable.

    Raises:
        ConfigError: If the path is missing or is not a file
    """
    if not isinstance(file_path, Path):
        file_path = Path(file_path)

    if not file_path.exists():
        raise ConfigError(f"{what} not found: {file_path}")

    if not file_path.is_file():
        raise ConfigError(f"{what} is not a file: {file_path}")

    logger.debug(f"File validation passed: {file_path}")
    return file_path


def check_range(value: float, low: float, high: float, what: str) -> None:
    """Raise ConfigError unless low <= value <= high."""
    if not (low <= value <= high):
        raise ConfigError(f"{what} must lie in [{low}, {high}], got {value}")
