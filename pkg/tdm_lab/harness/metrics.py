"""
Learning-curve records and their aggregation.

Per-seed curve (one row per evaluation point):

    env_steps, eval_env_steps, final_distance, mean_final_distance, reached_fraction

``final_distance`` is the median final distance over the evaluation
episodes; ``eval_env_steps`` counts evaluation transitions separately so
that ``env_steps`` only ever counts training transitions.

Aggregate curve: env_steps, one final_distance column per seed
(``seed_<k>``), then median, mean, std (population) and failed_seeds.
Aggregates are pure functions of the per-seed files.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from tdm_lab.core.models import EpisodeResult

logger = logging.getLogger(__name__)

SEED_COLUMNS = ['env_steps', 'eval_env_steps', 'final_distance', 'mean_final_distance', 'reached_fraction']
EVAL_COLUMNS = ['episode', 'final_distance', 'reached', 'steps_to_reach']
ABLATION_COLUMNS = ['sweep_value', 'seed', 'env_steps', 'final_distance']
REACH_THRESHOLD = 0.1


@dataclass
class EvalPoint:
    """Summary of the evaluation episodes run at one env-step count."""

    env_steps: int
    eval_env_steps: int
    final_distance: float
    mean_final_distance: float
    reached_fraction: float

    @classmethod
    def from_results(cls, env_steps: int, eval_env_steps: int, results: Sequence[EpisodeResult]) -> "EvalPoint":
        finals = np.array([r.final_distance for r in results], dtype=float)
        return cls(
            env_steps=int(env_steps),
            eval_env_steps=int(eval_env_steps),
            final_distance=float(np.median(finals)),
            mean_final_distance=float(finals.mean()),
            reached_fraction=float(np.mean([r.reached for r in results])),
        )

    def as_row(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in SEED_COLUMNS}


def seed_frame(points: Iterable[EvalPoint]) -> pd.DataFrame:
    return pd.DataFrame([p.as_row() for p in points], columns=SEED_COLUMNS)


def episode_frame(results: Sequence[EpisodeResult]) -> pd.DataFrame:
    """Per-episode evaluation report."""
    rows = [
        {
            'episode': k,
            'final_distance': r.final_distance,
            'reached': r.reached,
            'steps_to_reach': r.steps_to_reach if r.steps_to_reach is not None else -1,
        }
        for k, r in enumerate(results)
    ]
    return pd.DataFrame(rows, columns=EVAL_COLUMNS)


def aggregate_seed_frames(frames: Dict[int, pd.DataFrame], failed_seeds: Sequence[int] = ()) -> pd.DataFrame:
    """
    Combine per-seed curves on env_steps.

    Seeds whose curves stop early (failed runs) contribute only the points
    they reached; statistics at a point use the seeds that have it.
    """
    failed = ';'.join(str(s) for s in sorted(failed_seeds))
    seed_cols = [f'seed_{seed}' for seed in sorted(frames)]
    columns = ['env_steps', *seed_cols, 'median', 'mean', 'std', 'failed_seeds']
    non_empty = [f for f in frames.values() if not f.empty]
    if not non_empty:
        return pd.DataFrame(columns=columns)

    merged: Optional[pd.DataFrame] = None
    for seed in sorted(frames):
        part = frames[seed][['env_steps', 'final_distance']].rename(columns={'final_distance': f'seed_{seed}'})
        part = part.astype({'env_steps': np.int64, f'seed_{seed}': float})
        merged = part if merged is None else merged.merge(part, on='env_steps', how='outer')
    merged = merged.sort_values('env_steps').reset_index(drop=True)
    values = merged[seed_cols]
    merged['median'] = values.median(axis=1)
    merged['mean'] = values.mean(axis=1)
    merged['std'] = values.std(axis=1, ddof=0)
    merged['failed_seeds'] = failed
    merged['env_steps'] = merged['env_steps'].astype(np.int64)
    return merged[columns]


def aggregate_from_files(paths: Dict[int, Path], failed_seeds: Sequence[int] = ()) -> pd.DataFrame:
    """Recompute an aggregate offline from per-seed CSVs."""
    return aggregate_seed_frames({seed: pd.read_csv(path) for seed, path in paths.items()}, failed_seeds)


def steps_to_threshold(
    frame: pd.DataFrame,
    column: str = 'median',
    threshold: float = REACH_THRESHOLD,
) -> Optional[int]:
    """First env_steps at which ``column`` drops below ``threshold``; None if never."""
    if frame.empty:
        return None
    below = frame[frame[column] < threshold]
    return None if below.empty else int(below['env_steps'].iloc[0])


def ablation_rows(sweep_value: str, frames: Dict[int, pd.DataFrame]) -> List[Dict[str, object]]:
    """Long-format rows for one sweep value."""
    rows = []
    for seed in sorted(frames):
        for _, record in frames[seed].iterrows():
            rows.append({
                'sweep_value': sweep_value,
                'seed': seed,
                'env_steps': int(record['env_steps']),
                'final_distance': float(record['final_distance']),
            })
    return rows
