"""
TDM critic and actor networks.

The critic never outputs Q directly.  Its network f maps
concat(s, a, s_g, tau) to a goal-space vector and the value is

    Q(s, a, s_g, tau) = -|| f(s, a, s_g, tau) - s_g ||_1

so Q <= 0 holds by construction for every input and every parameter
setting.  tau enters the network as a raw integer appended to the input.

The actor maps concat(s, s_g, tau) through a tanh output layer and
rescales it into the action box, so its outputs are always in bounds.
"""

import logging
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from tdm_lab.core.interfaces import (
    ActionValueFunction,
    GoalConditionedActor,
    GoalConditionedPredictor,
)
from tdm_lab.core.models import ConfigError, HorizonError
from tdm_lab.nn.mlp import NONE, TANH, MlpParams, init_mlp, mlp_backward, mlp_forward
from tdm_lab.utils.validation import check_dim

logger = logging.getLogger(__name__)

FINAL_LAYER_SCALE = 0.1


def _horizon_column(horizons, rows: int) -> np.ndarray:
    taus = np.broadcast_to(np.asarray(horizons, dtype=float).reshape(-1), (rows,))
    if np.any(taus < 0):
        raise HorizonError(f"horizon tau must be >= 0, got min {taus.min():g}")
    return taus[:, None]


def _as_rows(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr[None, :] if arr.ndim == 1 else arr


# ============================================================================
# Critic
# ============================================================================

@dataclass
class TdmCritic(ActionValueFunction, GoalConditionedPredictor):
    """
    Goal- and horizon-conditioned critic with an l1 distance head.

    Attributes:
        params: Network f with input width S + A + G + 1 and output width G
        state_dim / action_dim / goal_dim: Input block widths
    """

    params: MlpParams
    state_dim: int
    action_dim: int
    goal_dim: int

    def __post_init__(self):
        check_dim(self.params.in_dim, self.state_dim + self.action_dim + self.goal_dim + 1, "critic input")
        check_dim(self.params.out_dim, self.goal_dim, "critic output")

    @classmethod
    def create(
        cls,
        state_dim: int,
        action_dim: int,
        goal_dim: int,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
    ) -> "TdmCritic":
        sizes = [state_dim + action_dim + goal_dim + 1, *hidden_sizes, goal_dim]
        params = init_mlp(sizes, rng, output_activation=NONE, final_scale=FINAL_LAYER_SCALE)
        return cls(params, state_dim, action_dim, goal_dim)

    def with_params(self, params: MlpParams) -> "TdmCritic":
        return replace(self, params=params)

    @property
    def action_slice(self) -> slice:
        return slice(self.state_dim, self.state_dim + self.action_dim)

    def network_input(self, states, actions, goals, horizons) -> np.ndarray:
        """concat(s, a, s_g, tau) as a 2-D batch."""
        s, a, g = _as_rows(states), _as_rows(actions), _as_rows(goals)
        check_dim(s.shape[1], self.state_dim, "critic state")
        check_dim(a.shape[1], self.action_dim, "critic action")
        check_dim(g.shape[1], self.goal_dim, "critic goal")
        return np.concatenate([s, a, g, _horizon_column(horizons, s.shape[0])], axis=1)

    def predict(self, states, actions, goals, horizons) -> np.ndarray:
        return mlp_forward(self.params, self.network_input(states, actions, goals, horizons))

    def value(self, states, actions, goals, horizons) -> Tuple[np.ndarray, np.ndarray]:
        """Return (q of shape (n,), per-dimension distances of shape (n, G))."""
        f = self.predict(states, actions, goals, horizons)
        per_dim = np.abs(f - _as_rows(goals))
        return -per_dim.sum(axis=1), per_dim

    def value_and_action_grad(self, states, actions, goals, horizons) -> Tuple[np.ndarray, np.ndarray]:
        x = self.network_input(states, actions, goals, horizons)
        f = mlp_forward(self.params, x)
        diff = f - _as_rows(goals)
        _, input_grad = mlp_backward(self.params, x, -np.sign(diff))
        return -np.abs(diff).sum(axis=1), input_grad[:, self.action_slice]


def tdm_value(
    critic: TdmCritic,
    state: np.ndarray,
    action: np.ndarray,
    goal: np.ndarray,
    tau: int,
) -> Tuple[float, np.ndarray]:
    """
    Q and per-dimension distances for a single (s, a, s_g, tau).

    Raises:
        HorizonError: If tau is negative
    """
    if tau < 0:
        raise HorizonError(f"horizon tau must be >= 0, got {tau}")
    q, per_dim = critic.value(state, action, goal, [tau])
    return float(q[0]), per_dim[0]


# ============================================================================
# Actor
# ============================================================================

@dataclass
class TdmActor(GoalConditionedActor):
    """Deterministic policy pi(s, s_g, tau) with a tanh head scaled to the action box."""

    params: MlpParams
    state_dim: int
    goal_dim: int
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        self.action_low = np.asarray(self.action_low, dtype=float)
        self.action_high = np.asarray(self.action_high, dtype=float)
        check_dim(self.params.in_dim, self.state_dim + self.goal_dim + 1, "actor input")
        check_dim(self.params.out_dim, self.action_low.shape[0], "actor output")
        if self.params.output_activation != TANH:
            raise ConfigError("actor networks need a tanh output activation")

    @classmethod
    def create(
        cls,
        state_dim: int,
        goal_dim: int,
        action_low: np.ndarray,
        action_high: np.ndarray,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
    ) -> "TdmActor":
        action_dim = int(np.asarray(action_low).shape[0])
        sizes = [state_dim + goal_dim + 1, *hidden_sizes, action_dim]
        params = init_mlp(sizes, rng, output_activation=TANH, final_scale=FINAL_LAYER_SCALE)
        return cls(params, state_dim, goal_dim, action_low, action_high)

    def with_params(self, params: MlpParams) -> "TdmActor":
        return replace(self, params=params)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.action_high + self.action_low)

    @property
    def half_range(self) -> np.ndarray:
        return 0.5 * (self.action_high - self.action_low)

    def network_input(self, states, goals, horizons) -> np.ndarray:
        s, g = _as_rows(states), _as_rows(goals)
        check_dim(s.shape[1], self.state_dim, "actor state")
        check_dim(g.shape[1], self.goal_dim, "actor goal")
        return np.concatenate([s, g, _horizon_column(horizons, s.shape[0])], axis=1)

    def act(self, states, goals, horizons) -> np.ndarray:
        squashed = mlp_forward(self.params, self.network_input(states, goals, horizons))
        return self.center + self.half_range * squashed
