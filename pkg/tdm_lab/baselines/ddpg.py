"""
Plain goal-conditioned DDPG baseline.

The goal is concatenated to the observation and the reward is the dense
negative l1 task distance after each step:

    r = -reward_scale * sum over task components j of |phi(s')_j - g_j|
    y = r + gamma * Q'(s', pi'(s', g), g)

Goals are stored with each transition at collection time and never
rewritten; the agent has no notion of a horizon tau.  Episodes end by time
limit only, so no transition is treated as terminal.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from tdm_lab.core.interfaces import BaseAgent, BaseEnvironment
from tdm_lab.core.models import ConfigError, ReplayError, Transition
from tdm_lab.core.rollout import run_training_episodes
from tdm_lab.nn.mlp import NONE, TANH, MlpParams, init_mlp, mlp_backward, mlp_forward
from tdm_lab.nn.optim import AdamState, adam_step
from tdm_lab.nn.target import TargetCopy, polyak_update
from tdm_lab.replay.buffer import DEFAULT_CAPACITY
from tdm_lab.utils.validation import check_finite

logger = logging.getLogger(__name__)

INIT_STREAM = 31
EXPLORATION_STREAM = 32
SAMPLING_STREAM = 33

FINAL_LAYER_SCALE = 0.1


@dataclass
class DdpgBaselineConfig:
    """DDPG hyperparameters; same defaults as the TDM where they overlap."""

    gamma: float = 0.99
    batch_size: int = 128
    updates_per_step: int = 5
    polyak: float = 0.999
    exploration_noise: float = 0.1
    critic_lr: float = 1e-3
    actor_lr: float = 1e-4
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 64])
    episodes: int = 0
    replay_capacity: int = DEFAULT_CAPACITY
    min_replay: Optional[int] = None
    reward_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.batch_size < 1 or self.updates_per_step < 1:
            raise ConfigError("batch_size and updates_per_step must be >= 1")
        if self.exploration_noise < 0:
            raise ConfigError(f"exploration_noise must be >= 0, got {self.exploration_noise}")


# ============================================================================
# Goal-Storing Replay
# ============================================================================

@dataclass
class GoalBatch:
    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    goals: np.ndarray
    rewards: np.ndarray


class GoalReplayBuffer:
    """Ring buffer of (s, a, s', g, r) with the collection-time goal."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int, goal_dim: int):
        self.capacity = int(capacity)
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros((capacity, action_dim))
        self._next_states = np.zeros((capacity, state_dim))
        self._goals = np.zeros((capacity, goal_dim))
        self._rewards = np.zeros(capacity)
        self._top = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def store(self, transition: Transition, goal: np.ndarray, reward: float) -> None:
        for values, what in ((transition.state, 'state'), (transition.action, 'action'),
                             (transition.next_state, 'next state'), (goal, 'goal')):
            check_finite(values, f"stored {what}")
        slot = self._top
        self._states[slot] = transition.state
        self._actions[slot] = transition.action
        self._next_states[slot] = transition.next_state
        self._goals[slot] = goal
        self._rewards[slot] = reward
        self._top = (self._top + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> GoalBatch:
        if self._size == 0:
            raise ReplayError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return GoalBatch(
            self._states[idx], self._actions[idx], self._next_states[idx],
            self._goals[idx], self._rewards[idx],
        )


# ============================================================================
# Networks and Updates
# ============================================================================

@dataclass
class DdpgNetworks:
    """Critic Q(s, a, g) -> scalar and actor pi(s, g) -> action in bounds."""

    critic: MlpParams
    actor: MlpParams
    state_dim: int
    goal_dim: int
    action_low: np.ndarray
    action_high: np.ndarray

    @classmethod
    def create(cls, spec, hidden_sizes: Sequence[int], rng: np.random.Generator) -> "DdpgNetworks":
        s, a, g = spec.state_dim, spec.action_dim, spec.goal_dim
        critic = init_mlp([s + a + g, *hidden_sizes, 1], rng, output_activation=NONE, final_scale=FINAL_LAYER_SCALE)
        actor = init_mlp([s + g, *hidden_sizes, a], rng, output_activation=TANH, final_scale=FINAL_LAYER_SCALE)
        return cls(critic, actor, s, g, spec.action_low.copy(), spec.action_high.copy())

    @property
    def half_range(self) -> np.ndarray:
        return 0.5 * (self.action_high - self.action_low)

    def act(self, actor: MlpParams, states: np.ndarray, goals: np.ndarray) -> np.ndarray:
        squashed = mlp_forward(actor, np.concatenate([states, goals], axis=1))
        return 0.5 * (self.action_high + self.action_low) + self.half_range * squashed

    def q(self, critic: MlpParams, states, actions, goals) -> np.ndarray:
        return mlp_forward(critic, np.concatenate([states, actions, goals], axis=1))[:, 0]


def dense_reward(env: BaseEnvironment, next_states: np.ndarray, goals: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """-scale * l1 task distance between phi(s') and g."""
    idx = list(env.spec.task_indices)
    achieved = env.goal_map(np.atleast_2d(next_states))
    return -scale * np.abs(achieved[:, idx] - np.atleast_2d(goals)[:, idx]).sum(axis=1)


def ddpg_targets(
    nets: DdpgNetworks,
    target_critic: MlpParams,
    target_actor: MlpParams,
    batch: GoalBatch,
    gamma: float,
) -> np.ndarray:
    """y = r + gamma * Q'(s', pi'(s', g), g); with gamma = 0 this is the reward alone."""
    if gamma == 0.0:
        return batch.rewards.copy()
    next_actions = nets.act(target_actor, batch.next_states, batch.goals)
    return batch.rewards + gamma * nets.q(target_critic, batch.next_states, next_actions, batch.goals)


def ddpg_critic_update(
    nets: DdpgNetworks,
    critic: MlpParams,
    batch: GoalBatch,
    targets: np.ndarray,
    opt_state: AdamState,
    learning_rate: float,
) -> Tuple[MlpParams, AdamState, float]:
    x = np.concatenate([batch.states, batch.actions, batch.goals], axis=1)
    residual = mlp_forward(critic, x)[:, 0] - targets
    loss = float(np.mean(residual ** 2))
    check_finite(loss, "ddpg critic loss")
    grads, _ = mlp_backward(critic, x, (2.0 * residual / len(residual))[:, None])
    critic, opt_state = adam_step(critic, grads, opt_state, learning_rate)
    return critic, opt_state, loss


def ddpg_actor_update(
    nets: DdpgNetworks,
    actor: MlpParams,
    critic: MlpParams,
    batch: GoalBatch,
    opt_state: AdamState,
    learning_rate: float,
) -> Tuple[MlpParams, AdamState]:
    actor_in = np.concatenate([batch.states, batch.goals], axis=1)
    actions = nets.act(actor, batch.states, batch.goals)
    critic_in = np.concatenate([batch.states, actions, batch.goals], axis=1)
    m = batch.states.shape[0]
    _, input_grad = mlp_backward(critic, critic_in, np.full((m, 1), 1.0 / m))
    dq_da = input_grad[:, nets.state_dim:nets.state_dim + actions.shape[1]]
    grads, _ = mlp_backward(actor, actor_in, -dq_da * nets.half_range)
    return adam_step(actor, grads, opt_state, learning_rate)


# ============================================================================
# Agent
# ============================================================================

class DdpgAgent(BaseAgent):
    """Goal-as-input DDPG without relabeling."""

    algo = 'ddpg'

    def __init__(self, env: BaseEnvironment, cfg: DdpgBaselineConfig, seed: int):
        self.env = env
        self.cfg = cfg
        spec = env.spec
        self.nets = DdpgNetworks.create(spec, cfg.hidden_sizes, np.random.default_rng(np.random.SeedSequence([seed, INIT_STREAM])))
        self.critic, self.actor = self.nets.critic, self.nets.actor
        self.target_critic = TargetCopy.of(self.critic, cfg.polyak)
        self.target_actor = TargetCopy.of(self.actor, cfg.polyak)
        self.critic_opt = AdamState.for_params(self.critic)
        self.actor_opt = AdamState.for_params(self.actor)
        self.buffer = GoalReplayBuffer(cfg.replay_capacity, spec.state_dim, spec.action_dim, spec.goal_dim)
        self.min_replay = cfg.batch_size if cfg.min_replay is None else cfg.min_replay
        self._explore_rng = np.random.default_rng(np.random.SeedSequence([seed, EXPLORATION_STREAM]))
        self._sample_rng = np.random.default_rng(np.random.SeedSequence([seed, SAMPLING_STREAM]))
        self._losses: List[float] = []
        self._qs: List[float] = []

    def act(self, state, goal, steps_remaining, explore):
        action = self.nets.act(self.actor, np.asarray(state)[None, :], np.asarray(goal)[None, :])[0]
        if explore and self.cfg.exploration_noise > 0:
            spec = self.env.spec
            action = action + self.cfg.exploration_noise * spec.action_range * self._explore_rng.normal(size=spec.action_dim)
        return self.env.clip_action(action)

    def begin_episode(self, goal):
        self._losses, self._qs = [], []

    def observe(self, transition: Transition, goal: np.ndarray) -> None:
        reward = float(dense_reward(self.env, transition.next_state, goal, self.cfg.reward_scale)[0])
        self.buffer.store(transition, goal, reward)
        if len(self.buffer) < self.min_replay:
            return
        for _ in range(self.cfg.updates_per_step):
            self.update_once()

    def update_once(self) -> float:
        cfg = self.cfg
        batch = self.buffer.sample(cfg.batch_size, self._sample_rng)
        targets = ddpg_targets(self.nets, self.target_critic.params, self.target_actor.params, batch, cfg.gamma)
        self.critic, self.critic_opt, loss = ddpg_critic_update(
            self.nets, self.critic, batch, targets, self.critic_opt, cfg.critic_lr
        )
        self.actor, self.actor_opt = ddpg_actor_update(
            self.nets, self.actor, self.critic, batch, self.actor_opt, cfg.actor_lr
        )
        self.target_critic = polyak_update(self.target_critic, self.critic)
        self.target_actor = polyak_update(self.target_actor, self.actor)
        self._losses.append(loss)
        self._qs.append(float(self.nets.q(self.critic, batch.states, batch.actions, batch.goals).mean()))
        return loss

    def end_episode(self, result):
        return {
            'mean_critic_loss': float(np.mean(self._losses)) if self._losses else float('nan'),
            'mean_q': float(np.mean(self._qs)) if self._qs else float('nan'),
        }

    def checkpoint(self):
        return {'critic': self.critic, 'actor': self.actor}


def ddpg_train(
    env: BaseEnvironment,
    cfg: DdpgBaselineConfig,
    seed: int,
    metrics_path: Optional[Path] = None,
):
    """
    Train the DDPG baseline for ``cfg.episodes`` episodes.

    Returns:
        (critic params, actor params, metrics rows in the TDM training schema)
    """
    agent = DdpgAgent(env, cfg, seed)
    rows = run_training_episodes(agent, env, cfg.episodes, seed, metrics_path)
    return agent.critic, agent.actor, rows
