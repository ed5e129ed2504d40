"""
Policy extraction from a trained TDM.

Three planners share one candidate-scoring core:

    direct_policy   a = pi(s, s_g, tau)
    explicit_mpc    sample goal candidates g (task components pinned), take
                    a_g = pi(s, g, T_remaining - 1), score r_c(f(s, a_g, g, T_remaining - 1)),
                    execute the action of the best candidate
    skip_k_plan     the same search for the first waypoint only, with horizon
                    K - 1; replanned every step

Constraint-satisfying plans come from the explicit parameterization: the
critic's f already predicts where the system will be, so no constrained
optimizer is needed.

Educational Notes:
- np.argmax returns the first maximum, which gives the lowest-index
  tie-break regardless of how scores were computed
- Candidates are drawn as one block, so a larger candidate count always
  searches a superset of a smaller one under the same seed
"""

import logging
from dataclasses import dataclass

import numpy as np

from tdm_lab.control.task import TaskReward
from tdm_lab.core.interfaces import GoalConditionedActor, GoalConditionedPredictor
from tdm_lab.core.models import PlanningError

logger = logging.getLogger(__name__)

POLICY_MODES = ('direct', 'mpc', 'skipK')


@dataclass
class PlannerConfig:
    """
    Attributes:
        candidates: Goal candidates per planning call
        skip_k: Waypoint spacing K for skip planning
        policy: One of 'direct', 'mpc', 'skipK'
    """

    candidates: int = 1024
    skip_k: int = 1
    policy: str = 'direct'

    def __post_init__(self):
        if self.candidates < 1:
            raise PlanningError(f"candidate count must be >= 1, got {self.candidates}")
        if self.policy not in POLICY_MODES:
            raise PlanningError(f"unknown policy '{self.policy}', expected one of {POLICY_MODES}")


@dataclass
class PlanResult:
    """Chosen action plus the winning candidate, its predicted goal-space outcome and score."""

    action: np.ndarray
    goal: np.ndarray
    prediction: np.ndarray
    score: float
    candidate_index: int


def direct_policy(actor: GoalConditionedActor, state: np.ndarray, goal: np.ndarray, tau: int) -> np.ndarray:
    """Return pi(s, s_g, tau)."""
    if tau < 0:
        raise PlanningError(f"tau must be >= 0, got {tau}")
    return actor.act(np.asarray(state)[None, :], np.asarray(goal)[None, :], [tau])[0]


def plan_candidates(
    critic: GoalConditionedPredictor,
    actor: GoalConditionedActor,
    state: np.ndarray,
    task: TaskReward,
    tau: int,
    candidates: int,
    rng: np.random.Generator,
) -> PlanResult:
    """Score sampled goal candidates at horizon ``tau`` and return the best."""
    goals = task.sample_candidates(candidates, rng)
    n = goals.shape[0]
    states = np.tile(np.asarray(state, dtype=float), (n, 1))
    horizons = np.full(n, tau)
    actions = actor.act(states, goals, horizons)
    predictions = critic.predict(states, actions, goals, horizons)
    scores = task.evaluate(predictions)
    best = int(np.argmax(scores))
    return PlanResult(actions[best], goals[best], predictions[best], float(scores[best]), best)


def explicit_mpc(
    critic: GoalConditionedPredictor,
    actor: GoalConditionedActor,
    state: np.ndarray,
    task: TaskReward,
    remaining: int,
    cfg: PlannerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Explicit MPC through f with horizon ``remaining - 1``.

    Raises:
        PlanningError: If remaining < 1
    """
    if remaining < 1:
        raise PlanningError(f"remaining horizon must be >= 1, got {remaining}")
    return plan_candidates(critic, actor, state, task, remaining - 1, cfg.candidates, rng).action


def skip_k_plan(
    critic: GoalConditionedPredictor,
    actor: GoalConditionedActor,
    state: np.ndarray,
    task: TaskReward,
    remaining: int,
    k: int,
    cfg: PlannerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    First action towards the best waypoint K steps ahead.

    Raises:
        PlanningError: Unless 1 <= K <= remaining
    """
    if not 1 <= k <= remaining:
        raise PlanningError(f"K must lie in [1, {remaining}], got {k}")
    return plan_candidates(critic, actor, state, task, k - 1, cfg.candidates, rng).action
