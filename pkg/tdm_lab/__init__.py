"""
TDM Lab - Temporal Difference Models at desk scale

Goal- and horizon-conditioned value functions (TDMs) trained from
relabeled off-policy data, the planners that extract actions from them,
model-free and model-based baselines, exact tabular oracles, and an
experiment harness that writes learning curves as CSV.

Educational Project Goals:
- Implement small networks, backpropagation and Adam from numpy alone
- See how goal and horizon relabeling turns one transition into many
  supervised targets
- Check learned values against an exact dynamic-programming solution

Usage:
    from tdm_lab.harness import ExperimentConfig, run_experiment

For CLI usage:
    python -m tdm_lab --help
"""

__version__ = '0.1.0'
__author__ = 'TDM Lab Project'
__license__ = 'MIT'

from tdm_lab.core.models import (
    ConfigError,
    HorizonError,
    InvariantViolation,
    NumericHealthError,
    OracleError,
    PlanningError,
    ReplayError,
    ShapeError,
    TdmLabError,
)
from tdm_lab.core.registry import ComponentRegistry

__all__ = [
    # Version info
    '__version__',
    '__author__',
    '__license__',

    # Exceptions
    'TdmLabError',
    'ShapeError',
    'NumericHealthError',
    'ConfigError',
    'ReplayError',
    'HorizonError',
    'PlanningError',
    'OracleError',
    'InvariantViolation',

    # Component discovery
    'ComponentRegistry',
]
