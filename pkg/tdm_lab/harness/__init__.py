"""
Experiment harness: configuration, seeded runs, evaluation curves, ablations.
"""

from tdm_lab.harness.config import ALGOS, SWEEP_KEYS, ExperimentConfig
from tdm_lab.harness.metrics import EvalPoint, aggregate_from_files, aggregate_seed_frames, steps_to_threshold
from tdm_lab.harness.runner import (
    create_registry,
    evaluate_agent,
    load_tdm_checkpoint,
    run_ablation,
    run_experiment,
    run_seed,
)

__all__ = [
    'ALGOS',
    'SWEEP_KEYS',
    'ExperimentConfig',
    'EvalPoint',
    'aggregate_seed_frames',
    'aggregate_from_files',
    'steps_to_threshold',
    'create_registry',
    'evaluate_agent',
    'load_tdm_checkpoint',
    'run_seed',
    'run_experiment',
    'run_ablation',
]
