"""
Learned forward dynamics and random-shooting MPC.

The model predicts the normalized state difference:

    network(normalize(s), normalize(a)) ~ (s' - s - mean_delta) / std_delta
    s'_hat = s + mean_delta + std_delta * network(...)

Normalization statistics come from warmup rollouts.  Shooting MPC samples
N action sequences of length H uniformly in the action box, rolls each
through the model, sums the task reward of every goal-mapped predicted
state, and executes the first action of the best sequence.

Educational Notes:
- Model evaluation happens in normalized space; predictions are
  denormalized before any distance is computed
- Per observation the model takes one Adam step on a minibatch
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from tdm_lab.control.task import TaskReward
from tdm_lab.core.interfaces import BaseAgent, BaseEnvironment, DynamicsPredictor
from tdm_lab.core.models import ConfigError, PlanningError, ReplayError, Transition
from tdm_lab.nn.mlp import NONE, MlpParams, init_mlp, mlp_backward, mlp_forward
from tdm_lab.nn.optim import AdamState, adam_step
from tdm_lab.replay.buffer import DEFAULT_CAPACITY, ReplayBuffer

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-6

INIT_STREAM = 21
FIT_STREAM = 22
SHOOTING_STREAM = 23
WARMUP_STREAM = 24


# ============================================================================
# Normalization
# ============================================================================

def _floored_std(values: np.ndarray, what: str) -> np.ndarray:
    std = values.std(axis=0)
    degenerate = std < STD_FLOOR
    if np.any(degenerate):
        logger.warning(
            f"{what}: {int(degenerate.sum())} constant dimension(s) {np.flatnonzero(degenerate).tolist()}, "
            f"std floored at {STD_FLOOR}"
        )
    return np.maximum(std, STD_FLOOR)


@dataclass
class NormalizationStats:
    """Per-dimension mean and std of states, actions and state differences."""

    state_mean: np.ndarray
    state_std: np.ndarray
    action_mean: np.ndarray
    action_std: np.ndarray
    delta_mean: np.ndarray
    delta_std: np.ndarray

    @classmethod
    def from_data(cls, states: np.ndarray, actions: np.ndarray, next_states: np.ndarray) -> "NormalizationStats":
        states = np.asarray(states, dtype=float)
        actions = np.asarray(actions, dtype=float)
        deltas = np.asarray(next_states, dtype=float) - states
        return cls(
            states.mean(axis=0), _floored_std(states, "state"),
            actions.mean(axis=0), _floored_std(actions, "action"),
            deltas.mean(axis=0), _floored_std(deltas, "state difference"),
        )

    def normalize_inputs(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.concatenate([
            (states - self.state_mean) / self.state_std,
            (actions - self.action_mean) / self.action_std,
        ], axis=1)

    def normalize_delta(self, deltas: np.ndarray) -> np.ndarray:
        return (deltas - self.delta_mean) / self.delta_std

    def denormalize_delta(self, normalized: np.ndarray) -> np.ndarray:
        return self.delta_mean + self.delta_std * normalized


# ============================================================================
# Model
# ============================================================================

@dataclass
class DynamicsModel(DynamicsPredictor):
    """Forward model predicting normalized state differences."""

    params: MlpParams
    stats: NormalizationStats
    opt_state: AdamState
    learning_rate: float = 1e-3
    last_loss: float = float('nan')

    @classmethod
    def create(
        cls,
        stats: NormalizationStats,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
        learning_rate: float = 1e-3,
    ) -> "DynamicsModel":
        state_dim = stats.state_mean.shape[0]
        action_dim = stats.action_mean.shape[0]
        params = init_mlp([state_dim + action_dim, *hidden_sizes, state_dim], rng, output_activation=NONE)
        return cls(params, stats, AdamState.for_params(params), learning_rate)

    def predict(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        actions = np.asarray(actions, dtype=float)
        single = states.ndim == 1
        s = states[None, :] if single else states
        a = actions[None, :] if actions.ndim == 1 else actions
        normalized = mlp_forward(self.params, self.stats.normalize_inputs(s, a))
        nxt = s + self.stats.denormalize_delta(normalized)
        return nxt[0] if single else nxt


def fit_dynamics(
    model: DynamicsModel,
    buffer: ReplayBuffer,
    steps: int,
    batch_size: int,
    rng: np.random.Generator,
) -> DynamicsModel:
    """
    Adam steps on minibatch MSE in normalized-difference space.

    Raises:
        ReplayError: If the buffer is empty
    """
    if steps < 0:
        raise ConfigError(f"fit steps must be >= 0, got {steps}")
    params, opt_state, loss = model.params, model.opt_state, model.last_loss
    for _ in range(steps):
        states, actions, next_states, _ = buffer.sample_transitions(batch_size, rng)
        x = model.stats.normalize_inputs(states, actions)
        target = model.stats.normalize_delta(next_states - states)
        residual = mlp_forward(params, x) - target
        loss = float(np.mean(residual ** 2))
        upstream = 2.0 * residual / residual.size
        grads, _ = mlp_backward(params, x, upstream)
        params, opt_state = adam_step(params, grads, opt_state, model.learning_rate)
    return replace(model, params=params, opt_state=opt_state, last_loss=loss)


def shooting_mpc(
    model: DynamicsPredictor,
    env: BaseEnvironment,
    state: np.ndarray,
    reward: TaskReward,
    horizon: int,
    sequences: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    First action of the best of ``sequences`` random action sequences.

    Scores sum r_c over the goal-mapped predicted states of each step.
    Ties go to the lowest sequence index.

    Raises:
        PlanningError: If horizon < 1 or sequences < 1
    """
    return shooting_plan(model, env, state, reward, horizon, sequences, rng)[0][0]


def shooting_plan(model, env, state, reward, horizon, sequences, rng):
    """Best action sequence of shape (H, A) plus all sequence scores."""
    if horizon < 1:
        raise PlanningError(f"shooting horizon must be >= 1, got {horizon}")
    if sequences < 1:
        raise PlanningError(f"sequence count must be >= 1, got {sequences}")
    spec = env.spec
    plans = rng.uniform(spec.action_low, spec.action_high, size=(sequences, horizon, spec.action_dim))
    states = np.tile(np.asarray(state, dtype=float), (sequences, 1))
    scores = np.zeros(sequences)
    for h in range(horizon):
        states = model.predict(states, plans[:, h, :])
        scores += reward.evaluate(env.goal_map(states))
    best = int(np.argmax(scores))
    return plans[best], scores


# ============================================================================
# Agent
# ============================================================================

@dataclass
class ModelBasedConfig:
    """Defaults: H = 15, N = 512 sequences, 20 warmup rollouts."""

    horizon: int = 15
    sequences: int = 512
    warmup_rollouts: int = 20
    batch_size: int = 128
    fit_steps_per_observation: int = 1
    learning_rate: float = 1e-3
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 64])
    replay_capacity: int = DEFAULT_CAPACITY

    def __post_init__(self):
        if self.horizon < 1 or self.sequences < 1:
            raise ConfigError("shooting horizon and sequence count must be >= 1")
        if self.warmup_rollouts < 1:
            raise ConfigError(f"warmup_rollouts must be >= 1, got {self.warmup_rollouts}")


class ModelBasedAgent(BaseAgent):
    """
    Random actions for the warmup rollouts, then shooting MPC through a
    dynamics model that is refit after every observation.
    """

    algo = 'mbmpc'

    def __init__(self, env: BaseEnvironment, cfg: ModelBasedConfig, seed: int):
        self.env = env
        self.cfg = cfg
        self.seed = seed
        self.buffer = ReplayBuffer.for_env(env, cfg.replay_capacity)
        self.model: Optional[DynamicsModel] = None
        self.episodes_seen = 0
        self._init_rng = np.random.default_rng(np.random.SeedSequence([seed, INIT_STREAM]))
        self._fit_rng = np.random.default_rng(np.random.SeedSequence([seed, FIT_STREAM]))
        self._plan_rng = np.random.default_rng(np.random.SeedSequence([seed, SHOOTING_STREAM]))
        self._warmup_rng = np.random.default_rng(np.random.SeedSequence([seed, WARMUP_STREAM]))

    def act(self, state, goal, steps_remaining, explore):
        spec = self.env.spec
        if self.model is None:
            return self._warmup_rng.uniform(spec.action_low, spec.action_high)
        return shooting_mpc(
            self.model, self.env, state, self.env.task_for_goal(goal),
            self.cfg.horizon, self.cfg.sequences, self._plan_rng,
        )

    def observe(self, transition: Transition, goal: np.ndarray) -> None:
        self.buffer.store(transition)
        if self.model is not None:
            self.model = fit_dynamics(
                self.model, self.buffer, self.cfg.fit_steps_per_observation, self.cfg.batch_size, self._fit_rng
            )

    def end_episode(self, result):
        self.episodes_seen += 1
        if self.model is None and self.episodes_seen >= self.cfg.warmup_rollouts:
            self._build_model()
        loss = self.model.last_loss if self.model is not None else float('nan')
        return {'mean_critic_loss': loss, 'mean_q': float('nan')}

    def _build_model(self) -> None:
        if len(self.buffer) == 0:
            raise ReplayError("no warmup data to compute normalization statistics")
        stats = NormalizationStats.from_data(*self.buffer.stored_arrays())
        self.model = DynamicsModel.create(stats, self.cfg.hidden_sizes, self._init_rng, self.cfg.learning_rate)
        logger.info(f"mbmpc: normalization statistics from {len(self.buffer)} warmup transitions")

    def checkpoint(self):
        return {'dynamics': self.model.params} if self.model is not None else None
