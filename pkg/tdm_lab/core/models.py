"""
Core data models for TDM Lab.

This module defines the exception hierarchy and the small value types that
flow between the replay buffer, the learners and the harness.

Educational Notes:
- Transitions never carry goals or horizons; both are attached at sample time
- RelabeledBatch is the contract between the replay buffer and every learner
- Dataclasses give us __init__/__repr__ for free and keep the types explicit
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


# ============================================================================
# Exception Classes
# ============================================================================

class TdmLabError(Exception):
    """
    Base exception for all TDM Lab errors.

    Educational Note:
    A single root lets the CLI catch every framework failure in one place
    while still mapping specific failures (config, numeric health) to
    distinct exit codes.
    """
    pass


class ShapeError(TdmLabError):
    """
    Raised when array dimensions do not match.

    Example scenarios:
    - Network input of the wrong width
    - Gradient shapes that do not mirror parameter shapes
    - Polyak update between differently shaped networks
    """
    pass


class NumericHealthError(TdmLabError):
    """
    Raised when a non-finite value shows up where only finite values are allowed.

    The optional ``context`` dictionary carries diagnostics (batch index,
    offending row values, episode and seed) so that aborted runs can be
    debugged from the log alone.
    """

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context: Dict[str, Any] = dict(context or {})

    def with_context(self, **extra: Any) -> "NumericHealthError":
        """Return the same error enriched with run context."""
        self.context.update(extra)
        return self

    def __str__(self) -> str:
        base = super().__str__()
        if not self.context:
            return base
        details = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{base} [{details}]"


class ConfigError(TdmLabError):
    """
    Raised when an experiment configuration is invalid.

    Example scenarios:
    - Unknown key in a config file (typo protection)
    - Value that cannot be coerced to the field type
    - Empty seed list or unsupported sweep key
    """
    pass


class ReplayError(TdmLabError):
    """Raised on invalid replay buffer use (e.g. sampling an empty buffer)."""
    pass


class HorizonError(TdmLabError):
    """Raised when a negative horizon tau reaches a value or target computation."""
    pass


class PlanningError(TdmLabError):
    """Raised when a planner receives an invalid horizon or skip length."""
    pass


class OracleError(TdmLabError):
    """Raised for tabular MDP and oracle table problems."""
    pass


class InvariantViolation(TdmLabError):
    """Raised when an architectural invariant (such as q <= 0) fails a probe."""
    pass


# ============================================================================
# Replay Data Model
# ============================================================================

@dataclass
class Transition:
    """
    One environment step (s, a, s').

    Attributes:
        state: State before the step
        action: Action actually executed (after noise and clipping)
        next_state: Resulting state
        trajectory_id: Identifier of the episode the step belongs to
        step_index: Position of the step within its trajectory
    """

    state: np.ndarray
    action: np.ndarray
    next_state: np.ndarray
    trajectory_id: int = 0
    step_index: int = 0


@dataclass
class RelabeledBatch:
    """
    M rows of (s, a, s', s_g, tau) produced by relabeling at sample time.

    ``next_goals`` holds goal_map(s') for each row so that the tau = 0 distance
    term never needs to know the environment.  ``goal_sources`` records the
    buffer index of the transition whose next state supplied the goal
    (-1 when the goal came from the goal box).
    """

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    goals: np.ndarray
    horizons: np.ndarray
    next_goals: np.ndarray
    base_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    goal_sources: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.states.shape[0])

    def row(self, index: int) -> Dict[str, Any]:
        """Return one row as plain lists, used in numeric-health diagnostics."""
        return {
            'state': self.states[index].tolist(),
            'action': self.actions[index].tolist(),
            'next_state': self.next_states[index].tolist(),
            'goal': self.goals[index].tolist(),
            'tau': int(self.horizons[index]),
        }


# ============================================================================
# Episode Results
# ============================================================================

@dataclass
class EpisodeResult:
    """
    Summary of one rollout.

    Attributes:
        final_distance: Task distance of the last state to the goal
        reached: True when the final distance is below the reach threshold
        steps_to_reach: First step index (1-based) at which the goal was
            within the threshold, or None if never reached
        steps: Number of environment transitions in the episode
        distances: Per-step task distances (after each transition)
    """

    final_distance: float
    reached: bool
    steps_to_reach: Optional[int]
    steps: int
    distances: List[float] = field(default_factory=list)
