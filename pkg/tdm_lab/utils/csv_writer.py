"""
CSV output shared by metrics logs, evaluation reports and replay dumps.

All files use comma separation, '.' decimals, a header row and line-feed
endings, written through pandas.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from tdm_lab.core.models import TdmLabError

logger = logging.getLogger(__name__)


def write_frame(df: pd.DataFrame, output_path: Path, float_format: str = '%.10g') -> Path:
    """
    Write a DataFrame as CSV, creating parent directories.

    Raises:
        TdmLabError: If the file cannot be written
    """
    output_path = Path(output_path)
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(
            output_path,
            sep=',',
            index=False,
            encoding='utf-8',
            lineterminator='\n',
            float_format=float_format,
        )
    except OSError as e:
        raise TdmLabError(f"Failed to write CSV {output_path}: {e}")

    logger.debug(f"CSV written: {output_path} ({len(df)} rows, {len(df.columns)} columns)")
    return output_path


def write_rows(
    rows: List[Dict[str, Any]],
    columns: Sequence[str],
    output_path: Path,
) -> Path:
    """Write dict rows in a fixed column order; an empty list gives a header-only file."""
    df = pd.DataFrame(rows, columns=list(columns))
    return write_frame(df, output_path)
