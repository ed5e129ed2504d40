"""
Abstract interfaces for TDM Lab components.

This module defines the abstract base classes that environments, agents,
critics, actors and dynamics models implement, so that planners, trainers
and the harness can work with any implementation interchangeably.

Educational Notes:
- Abstract Base Classes (ABC) enforce interface contracts
- Planners only need ActionValueFunction / GoalConditionedActor, which is
  what lets tests plug in tabular or closed-form stand-ins for networks
- All array-valued methods accept batches: shape (n, dim)

Design Pattern: Template Method + Strategy Pattern
- Template: BaseEnvironment.step validates, clips and delegates to dynamics()
- Strategy: agents (tdm, ddpg, mbmpc) are swapped by configuration
"""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, Dict, Optional, Tuple

import numpy as np

from tdm_lab.core.models import EpisodeResult, Transition
from tdm_lab.utils.validation import check_dim, check_finite

if TYPE_CHECKING:
    from tdm_lab.control.task import TaskReward
    from tdm_lab.envs.spec import EnvSpec


# ============================================================================
# Environment Interface
# ============================================================================

class BaseEnvironment(ABC):
    """
    Deterministic goal-conditioned environment.

    Subclasses provide the initial-state distribution, the goal sampler and
    the batched dynamics; this base class supplies validation, action
    clipping, the affine goal map and task distances.

    Contract:
    - step() is a pure function of (state, action)
    - goal_map() depends only on the state
    - reset(seed) is a pure function of the seed
    """

    REACH_THRESHOLD = 0.1

    def __init__(self, spec: "EnvSpec"):
        self.spec = spec

    # -- to implement ---------------------------------------------------------

    @abstractmethod
    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        """Draw s0 from the initial-state distribution."""

    @abstractmethod
    def sample_goal(self, rng: np.random.Generator) -> np.ndarray:
        """Draw a goal-space vector from the goal-sampling region."""

    @abstractmethod
    def dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Batched next states for already clipped actions."""

    # -- shared behaviour -----------------------------------------------------

    @property
    def name(self) -> str:
        return self.spec.name

    def reset(self, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """Return (initial state, goal) as a deterministic function of ``seed``."""
        rng = np.random.default_rng(seed)
        state = self.initial_state(rng)
        goal = self.sample_goal(rng)
        return state, goal

    def clip_action(self, action: np.ndarray) -> np.ndarray:
        return np.clip(action, self.spec.action_low, self.spec.action_high)

    def step(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        """
        Advance one step; accepts single vectors or batches.

        Raises:
            ShapeError: If state or action widths do not match the EnvSpec
            NumericHealthError: If the action has non-finite entries
        """
        state = np.asarray(state, dtype=float)
        action = np.asarray(action, dtype=float)
        check_dim(state.shape[-1], self.spec.state_dim, f"{self.name} state")
        check_dim(action.shape[-1], self.spec.action_dim, f"{self.name} action")
        check_finite(action, f"{self.name} action")
        single = state.ndim == 1
        states = state[None, :] if single else state
        actions = self.clip_action(action[None, :] if action.ndim == 1 else action)
        nxt = self.dynamics(states, actions)
        return nxt[0] if single else nxt

    def goal_map(self, state: np.ndarray) -> np.ndarray:
        """Affine map phi(s) = G s + c from state features into goal space."""
        state = np.asarray(state, dtype=float)
        check_dim(state.shape[-1], self.spec.state_dim, f"{self.name} state")
        return state @ self.spec.goal_matrix.T + self.spec.goal_offset

    def task_distance(self, state: np.ndarray, goal: np.ndarray) -> float:
        """l1 distance on the task components of goal space."""
        idx = list(self.spec.task_indices)
        achieved = self.goal_map(state)
        return float(np.sum(np.abs(achieved[..., idx] - np.asarray(goal)[..., idx])))

    def task_for_goal(self, goal: np.ndarray) -> "TaskReward":
        """Task reward pinning the task components of ``goal``."""
        from tdm_lab.control.task import TaskReward

        return TaskReward.feature_target(
            goal=goal,
            fixed_indices=self.spec.task_indices,
            goal_low=self.spec.goal_low,
            goal_high=self.spec.goal_high,
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"


# ============================================================================
# Value Function / Policy Interfaces
# ============================================================================

class ActionValueFunction(ABC):
    """
    Anything that scores (s, a, s_g, tau) and can differentiate w.r.t. a.

    TdmCritic is the production implementation; tests use closed-form
    surrogates to check actor updates in isolation.
    """

    @abstractmethod
    def value_and_action_grad(
        self,
        states: np.ndarray,
        actions: np.ndarray,
        goals: np.ndarray,
        horizons: np.ndarray,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Return (q of shape (n,), dq/da of shape (n, action_dim))."""


class GoalConditionedPredictor(ABC):
    """Goal-conditioned model f(s, a, s_g, tau) predicting a goal-space vector."""

    @abstractmethod
    def predict(
        self,
        states: np.ndarray,
        actions: np.ndarray,
        goals: np.ndarray,
        horizons: np.ndarray,
    ) -> np.ndarray:
        """Return f of shape (n, goal_dim)."""


class GoalConditionedActor(ABC):
    """Deterministic policy pi(s, s_g, tau)."""

    @abstractmethod
    def act(self, states: np.ndarray, goals: np.ndarray, horizons: np.ndarray) -> np.ndarray:
        """Return actions of shape (n, action_dim), within bounds."""


class DynamicsPredictor(ABC):
    """Forward model used by shooting MPC."""

    @abstractmethod
    def predict(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Return predicted next states for batched (s, a)."""


# ============================================================================
# Agent Interface
# ============================================================================

class BaseAgent(ABC):
    """
    A learner that can act, learn from transitions and report per-episode metrics.

    The harness drives every algorithm (tdm, ddpg, mbmpc) through this API,
    which keeps env-step accounting and evaluation identical across them.
    """

    algo: str = 'base'

    @abstractmethod
    def act(
        self,
        state: np.ndarray,
        goal: np.ndarray,
        steps_remaining: int,
        explore: bool,
    ) -> np.ndarray:
        """Choose an action; ``explore`` toggles training-time noise."""

    @abstractmethod
    def observe(self, transition: Transition, goal: np.ndarray) -> None:
        """Store a transition (and the goal used while collecting it) and learn."""

    def begin_episode(self, goal: np.ndarray) -> None:
        """Hook called at every training episode start."""

    def end_episode(self, result: EpisodeResult) -> Dict[str, Any]:
        """Hook called at every training episode end; returns extra metrics."""
        return {}

    def checkpoint(self) -> Optional[Dict[str, Any]]:
        """Networks to persist, keyed by file stem; None if nothing to save."""
        return None
