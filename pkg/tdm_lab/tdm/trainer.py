"""
TDM training loop.

Per environment step the agent acts (policy plus Gaussian exploration
noise), stores the transition, and once the buffer holds ``min_replay``
transitions runs I update iterations:

    sample M rows -> relabel goals and tau -> targets from target copies
    -> critic step -> actor step -> polyak both target copies

After each episode the critic is probed on random inputs to assert that
q <= 0 still holds.

Educational Notes:
- TdmAgent plugs into the shared BaseAgent API, so the harness counts
  env steps and evaluates it exactly like the baselines
- All randomness comes from generators seeded by SeedSequence([seed, stream]),
  one stream per concern (init, exploration, sampling, planning, probes)
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from tdm_lab.control.planners import PlannerConfig, direct_policy, explicit_mpc, skip_k_plan
from tdm_lab.core.interfaces import BaseAgent, BaseEnvironment
from tdm_lab.core.models import (
    ConfigError,
    EpisodeResult,
    InvariantViolation,
    NumericHealthError,
    Transition,
)
from tdm_lab.core.rollout import run_training_episodes
from tdm_lab.nn.optim import AdamState
from tdm_lab.nn.target import TargetCopy, polyak_update
from tdm_lab.replay.buffer import DEFAULT_CAPACITY, RelabelStrategy, ReplayBuffer
from tdm_lab.tdm.losses import (
    SupervisionMode,
    actor_update,
    bellman_targets,
    critic_update,
    greedy_discrete_actions,
)
from tdm_lab.tdm.networks import TdmActor, TdmCritic

logger = logging.getLogger(__name__)


INIT_STREAM = 1
EXPLORATION_STREAM = 2
SAMPLING_STREAM = 3
PLANNING_STREAM = 4
PROBE_STREAM = 5

PROBE_COUNT = 256


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for one concern of one run."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


# ============================================================================
# Configuration
# ============================================================================

@dataclass
class TrainConfig:
    """
    TDM hyperparameters.

    ``tau_max`` of None means horizon - 1; ``min_replay`` of None means one
    batch.  ``exploration_noise`` is the noise std as a fraction of each
    action dimension's range.
    """

    batch_size: int = 128
    updates_per_step: int = 5
    polyak: float = 0.999
    exploration_noise: float = 0.1
    tau_max: Optional[int] = None
    critic_lr: float = 1e-3
    actor_lr: float = 1e-4
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 64])
    episodes: int = 0
    supervision: SupervisionMode = SupervisionMode.VECTORIZED
    relabel: RelabelStrategy = RelabelStrategy.FUTURE_ON_TRAJECTORY
    future_window: Optional[int] = None
    replay_capacity: int = DEFAULT_CAPACITY
    min_replay: Optional[int] = None
    reward_scale: float = 1.0
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.updates_per_step < 1:
            raise ConfigError(f"updates_per_step must be >= 1, got {self.updates_per_step}")
        if self.exploration_noise < 0:
            raise ConfigError(f"exploration_noise must be >= 0, got {self.exploration_noise}")
        if self.tau_max is not None and self.tau_max < 0:
            raise ConfigError(f"tau_max must be >= 0, got {self.tau_max}")
        if self.episodes < 0:
            raise ConfigError(f"episodes must be >= 0, got {self.episodes}")
        if self.reward_scale <= 0:
            raise ConfigError(f"reward_scale must be > 0, got {self.reward_scale}")

    def resolved_tau_max(self, horizon: int) -> int:
        return horizon - 1 if self.tau_max is None else int(self.tau_max)

    def resolved_min_replay(self) -> int:
        return self.batch_size if self.min_replay is None else int(self.min_replay)


# ============================================================================
# Agent
# ============================================================================

class TdmAgent(BaseAgent):
    """
    TDM learner: critic, actor, their target copies, optimizers and replay.

    On environments with a finite action set (tabular MDPs) the max over
    actions in targets and in greedy action selection is exact enumeration.
    """

    algo = 'tdm'

    def __init__(self, env: BaseEnvironment, cfg: TrainConfig, seed: int):
        self.env = env
        self.cfg = cfg
        self.seed = seed
        spec = env.spec
        self.tau_max = cfg.resolved_tau_max(spec.horizon)
        self.min_replay = cfg.resolved_min_replay()

        init_rng = stream_rng(seed, INIT_STREAM)
        self.critic = TdmCritic.create(spec.state_dim, spec.action_dim, spec.goal_dim, cfg.hidden_sizes, init_rng)
        self.actor = TdmActor.create(
            spec.state_dim, spec.goal_dim, spec.action_low, spec.action_high, cfg.hidden_sizes, init_rng
        )
        self.target_critic = TargetCopy.of(self.critic.params, cfg.polyak)
        self.target_actor = TargetCopy.of(self.actor.params, cfg.polyak)
        self.critic_opt = AdamState.for_params(self.critic.params)
        self.actor_opt = AdamState.for_params(self.actor.params)
        self.buffer = ReplayBuffer.for_env(env, cfg.replay_capacity)

        self.action_set: Optional[np.ndarray] = env.action_set() if hasattr(env, 'action_set') else None

        self._explore_rng = stream_rng(seed, EXPLORATION_STREAM)
        self._sample_rng = stream_rng(seed, SAMPLING_STREAM)
        self._plan_rng = stream_rng(seed, PLANNING_STREAM)
        self._probe_rng = stream_rng(seed, PROBE_STREAM)

        self.gradient_steps = 0
        self._episode_losses: List[float] = []
        self._episode_qs: List[float] = []
        logger.debug(
            f"TdmAgent ready: env={env.name}, tau_max={self.tau_max}, "
            f"supervision={cfg.supervision.value}, relabel={cfg.relabel.value}"
        )

    # -- acting ---------------------------------------------------------------

    def planning_horizon(self, steps_remaining: int) -> int:
        """Remaining steps, capped at tau_max + 1 (so tau = min(T - t - 1, tau_max))."""
        return max(1, min(int(steps_remaining), self.tau_max + 1))

    def greedy_action(self, state: np.ndarray, goal: np.ndarray, steps_remaining: int) -> np.ndarray:
        remaining = self.planning_horizon(steps_remaining)
        planner = self.cfg.planner
        if self.action_set is not None and planner.policy == 'direct':
            return greedy_discrete_actions(
                self.critic, np.asarray(state)[None, :], np.asarray(goal)[None, :], [remaining - 1], self.action_set
            )[0]
        if planner.policy == 'direct':
            return direct_policy(self.actor, state, goal, remaining - 1)
        task = self.env.task_for_goal(goal)
        if planner.policy == 'mpc':
            return explicit_mpc(self.critic, self.actor, state, task, remaining, planner, self._plan_rng)
        k = min(planner.skip_k, remaining)
        return skip_k_plan(self.critic, self.actor, state, task, remaining, k, planner, self._plan_rng)

    def act(self, state, goal, steps_remaining, explore):
        action = self.greedy_action(state, goal, steps_remaining)
        if explore and self.cfg.exploration_noise > 0:
            spec = self.env.spec
            noise = self._explore_rng.normal(0.0, 1.0, size=spec.action_dim)
            action = action + self.cfg.exploration_noise * spec.action_range * noise
        return self.env.clip_action(action)

    # -- learning -------------------------------------------------------------

    def begin_episode(self, goal):
        self._episode_losses = []
        self._episode_qs = []

    def observe(self, transition: Transition, goal: np.ndarray) -> None:
        self.buffer.store(transition)
        if len(self.buffer) < self.min_replay:
            return
        for _ in range(self.cfg.updates_per_step):
            self.update_once()

    def update_once(self) -> Tuple[float, float]:
        """One sample-relabel-update-polyak iteration; returns (critic loss, mean q)."""
        cfg = self.cfg
        batch = self.buffer.sample_relabeled(
            cfg.batch_size, cfg.relabel, self.tau_max, self._sample_rng, cfg.future_window
        )
        target_critic = self.critic.with_params(self.target_critic.params)
        target_actor = self.actor.with_params(self.target_actor.params)
        targets = bellman_targets(target_critic, target_actor, batch, cfg.supervision, self.action_set)
        try:
            self.critic, self.critic_opt, loss = critic_update(
                self.critic, batch, targets, self.critic_opt, cfg.supervision, cfg.critic_lr, cfg.reward_scale
            )
        except NumericHealthError as e:
            raise e.with_context(gradient_step=self.gradient_steps)

        if self.action_set is None:
            self.actor, self.actor_opt = actor_update(self.actor, self.critic, batch, self.actor_opt, cfg.actor_lr)
        self.target_critic = polyak_update(self.target_critic, self.critic.params)
        self.target_actor = polyak_update(self.target_actor, self.actor.params)
        self.gradient_steps += 1

        q, _ = self.critic.value(batch.states, batch.actions, batch.goals, batch.horizons)
        mean_q = float(q.mean())
        self._episode_losses.append(loss)
        self._episode_qs.append(mean_q)
        logger.debug(f"update {self.gradient_steps}: critic_loss={loss:.6f} mean_q={mean_q:.4f}")
        return loss, mean_q

    def probe_non_positive(self, count: int = PROBE_COUNT) -> float:
        """
        Evaluate q on random inputs and assert q <= 0.

        Raises:
            InvariantViolation: If any probe value is positive
        """
        spec = self.env.spec
        rng = self._probe_rng
        states = rng.normal(size=(count, spec.state_dim))
        actions = rng.uniform(spec.action_low, spec.action_high, size=(count, spec.action_dim))
        goals = rng.uniform(spec.goal_low, spec.goal_high, size=(count, spec.goal_dim))
        horizons = rng.integers(0, self.tau_max + 1, size=count)
        q, _ = self.critic.value(states, actions, goals, horizons)
        worst = float(q.max())
        if worst > 0:
            raise InvariantViolation(f"critic produced q = {worst} > 0")
        return worst

    def end_episode(self, result: EpisodeResult) -> Dict[str, Any]:
        self.probe_non_positive()
        return {
            'mean_critic_loss': float(np.mean(self._episode_losses)) if self._episode_losses else float('nan'),
            'mean_q': float(np.mean(self._episode_qs)) if self._episode_qs else float('nan'),
        }

    def checkpoint(self):
        return {'critic': self.critic.params, 'actor': self.actor.params}


# ============================================================================
# Training Entry Point
# ============================================================================

def train(
    env: BaseEnvironment,
    cfg: TrainConfig,
    seed: int,
    metrics_path: Optional[Path] = None,
) -> Tuple[TdmCritic, TdmActor, List[Dict[str, Any]]]:
    """
    Train a TDM for ``cfg.episodes`` episodes.

    Returns:
        (critic, actor, metrics rows with TRAINING_COLUMNS keys)
    """
    agent = TdmAgent(env, cfg, seed)
    rows = run_training_episodes(agent, env, cfg.episodes, seed, metrics_path)
    return agent.critic, agent.actor, rows
