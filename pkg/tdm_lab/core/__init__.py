"""
Core components of TDM Lab.

This package contains:
- Data models (Transition, RelabeledBatch, EpisodeResult, exceptions)
- Abstract interfaces (BaseEnvironment, BaseAgent, value/policy ABCs)
- Component registry (ComponentRegistry)
- Shared episode execution (core.rollout)
"""

from tdm_lab.core.interfaces import (
    ActionValueFunction,
    BaseAgent,
    BaseEnvironment,
    DynamicsPredictor,
    GoalConditionedActor,
    GoalConditionedPredictor,
)
from tdm_lab.core.models import (
    ConfigError,
    EpisodeResult,
    HorizonError,
    InvariantViolation,
    NumericHealthError,
    OracleError,
    PlanningError,
    RelabeledBatch,
    ReplayError,
    ShapeError,
    TdmLabError,
    Transition,
)
from tdm_lab.core.registry import ComponentRegistry

__all__ = [
    # Models
    'Transition',
    'RelabeledBatch',
    'EpisodeResult',

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

    # Interfaces
    'BaseEnvironment',
    'BaseAgent',
    'ActionValueFunction',
    'GoalConditionedPredictor',
    'GoalConditionedActor',
    'DynamicsPredictor',

    # Registry
    'ComponentRegistry',
]
