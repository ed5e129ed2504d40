"""
Episode execution shared by every learner and by evaluation.

Episodes always run to the environment horizon T (no early termination);
the goal-reached time is still recorded for metrics.  TrainingRollout
advances one environment transition per call so that the harness can
interleave evaluations at exact env-step counts, even mid-episode.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from tdm_lab.core.interfaces import BaseAgent, BaseEnvironment
from tdm_lab.core.models import EpisodeResult, NumericHealthError, Transition
from tdm_lab.utils.csv_writer import write_rows

logger = logging.getLogger(__name__)

EPISODE_STREAM = 11
EVAL_STREAM = 17


def derive_seed(seed: int, stream: int, index: int) -> int:
    """Deterministic child seed for (run seed, stream, index)."""
    return int(np.random.SeedSequence([int(seed), int(stream), int(index)]).generate_state(1)[0])


def summarize_distances(distances: List[float], steps: int) -> EpisodeResult:
    threshold = BaseEnvironment.REACH_THRESHOLD
    steps_to_reach = next(
        (k + 1 for k, d in enumerate(distances) if d < threshold), None
    )
    final = distances[-1] if distances else float('nan')
    return EpisodeResult(
        final_distance=float(final),
        reached=bool(distances) and final < threshold,
        steps_to_reach=steps_to_reach,
        steps=steps,
        distances=list(distances),
    )


def run_episode(
    env: BaseEnvironment,
    policy: Callable[[np.ndarray, np.ndarray, int], np.ndarray],
    seed: int,
) -> EpisodeResult:
    """
    Roll out one noise-free episode.

    Args:
        env: Environment to run
        policy: Callable (state, goal, steps_remaining) -> action
        seed: Reset seed (initial state and goal)

    Returns:
        EpisodeResult with per-step task distances
    """
    state, goal = env.reset(seed)
    horizon = env.spec.horizon
    distances = []
    for t in range(horizon):
        action = policy(state, goal, horizon - t)
        state = env.step(state, action)
        distances.append(env.task_distance(state, goal))
    return summarize_distances(distances, horizon)


class TrainingRollout:
    """
    Step-wise training data collection for one agent.

    Every call to ``step()`` executes exactly one environment transition,
    hands it to the agent, and closes the episode when the horizon is hit.
    """

    def __init__(
        self,
        env: BaseEnvironment,
        agent: BaseAgent,
        seed: int,
        on_episode_end: Optional[Callable[[int, EpisodeResult, Dict[str, Any]], None]] = None,
    ):
        self.env = env
        self.agent = agent
        self.seed = seed
        self.on_episode_end = on_episode_end
        self.episode = 0
        self.env_steps = 0
        self._t = 0
        self._state: Optional[np.ndarray] = None
        self._goal: Optional[np.ndarray] = None
        self._distances: List[float] = []

    def _begin(self) -> None:
        self._state, self._goal = self.env.reset(derive_seed(self.seed, EPISODE_STREAM, self.episode))
        self._t = 0
        self._distances = []
        self.agent.begin_episode(self._goal)

    def step(self) -> Optional[EpisodeResult]:
        """Execute one transition; returns the EpisodeResult when an episode closes."""
        if self._state is None:
            self._begin()
        horizon = self.env.spec.horizon
        action = self.agent.act(self._state, self._goal, horizon - self._t, explore=True)
        executed = self.env.clip_action(np.asarray(action, dtype=float))
        next_state = self.env.step(self._state, executed)
        self.agent.observe(
            Transition(self._state, executed, next_state, self.episode, self._t),
            self._goal,
        )
        self.env_steps += 1
        self._distances.append(self.env.task_distance(next_state, self._goal))
        self._state = next_state
        self._t += 1

        if self._t < horizon:
            return None

        result = summarize_distances(self._distances, horizon)
        extra = self.agent.end_episode(result)
        if self.on_episode_end is not None:
            self.on_episode_end(self.episode, result, extra)
        logger.debug(
            f"episode {self.episode} done: final_distance={result.final_distance:.4f} "
            f"env_steps={self.env_steps}"
        )
        self.episode += 1
        self._state = None
        return result

    def run_episodes(self, count: int) -> None:
        """Run ``count`` complete episodes."""
        target = self.episode + count
        while self.episode < target:
            self.step()


# ============================================================================
# Training Runs
# ============================================================================

TRAINING_COLUMNS = ['episode', 'env_steps', 'final_distance', 'reached', 'mean_critic_loss', 'mean_q']


def training_row(episode: int, env_steps: int, result: EpisodeResult, extra: Dict[str, Any]) -> Dict[str, Any]:
    return {
        'episode': episode,
        'env_steps': env_steps,
        'final_distance': result.final_distance,
        'reached': result.reached,
        'mean_critic_loss': extra.get('mean_critic_loss', float('nan')),
        'mean_q': extra.get('mean_q', float('nan')),
    }


def run_training_episodes(
    agent: BaseAgent,
    env: BaseEnvironment,
    episodes: int,
    seed: int,
    metrics_path: Optional[Path] = None,
) -> List[Dict[str, Any]]:
    """
    Run ``episodes`` training episodes and collect one metrics row per episode.

    On any error the rows collected so far are written to ``metrics_path``
    (when given) before the error propagates with run context attached.
    """
    rows: List[Dict[str, Any]] = []
    rollout = TrainingRollout(env, agent, seed)
    rollout.on_episode_end = lambda ep, result, extra: rows.append(
        training_row(ep, rollout.env_steps, result, extra)
    )
    try:
        rollout.run_episodes(episodes)
    except NumericHealthError as e:
        logger.error(f"{agent.algo} run aborted at episode {rollout.episode} (seed {seed}): {e}")
        raise e.with_context(algo=agent.algo, seed=seed, episode=rollout.episode)
    finally:
        if metrics_path is not None:
            write_rows(rows, TRAINING_COLUMNS, metrics_path)
    if rows:
        last = rows[-1]
        logger.info(
            f"{agent.algo} seed {seed}: {len(rows)} episodes, {rollout.env_steps} env steps, "
            f"final distance {last['final_distance']:.4f}"
        )
    return rows


