"""
Exact and tabular solutions of the finite-horizon TDM recursion.

On a deterministic TabularMdp with embedding distance D the recursion is

    Q[s, a, g, 0]   = -D(next[s, a], g)
    Q[s, a, g, tau] = max_a' Q[next[s, a], a', g, tau - 1]

dp_solve computes it by backward induction, one tau layer at a time.  The
tabular learner reaches the same table from sampled experience by treating
every stored transition as supervision for every goal and every horizon.

Educational Notes:
- Tables are arrays of shape (S, A, G, tau_max + 1) with G = S (every
  state is a goal)
- Layer tau only reads layer tau - 1, so ascending-tau sweeps with
  learning rate 1 reproduce the exact solution
- Greedy-action comparisons treat values within 1e-9 as ties
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from tdm_lab.core.models import ConfigError, OracleError
from tdm_lab.envs.tabular import TabularMdp, tabular_step
from tdm_lab.utils.validation import check_range

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9


@dataclass
class TdmTable:
    """Q values indexed [s, a, g, tau]."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 4:
            raise OracleError(f"a TDM table needs 4 axes (s, a, g, tau), got shape {self.values.shape}")

    @classmethod
    def zeros(cls, mdp: TabularMdp, tau_max: int) -> "TdmTable":
        return cls(np.zeros((mdp.n_states, mdp.n_actions, mdp.n_states, tau_max + 1)))

    @property
    def tau_max(self) -> int:
        return int(self.values.shape[3]) - 1

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.values.shape)

    def greedy_sets(self) -> np.ndarray:
        """Boolean (S, A, G, T) mask of actions within tolerance of the max per (s, g, tau)."""
        best = self.values.max(axis=1, keepdims=True)
        return self.values >= best - TIE_TOLERANCE


# ============================================================================
# Exact Solution
# ============================================================================

def dp_solve(mdp: TabularMdp, tau_max: int) -> TdmTable:
    """
    Backward induction over tau.

    Raises:
        OracleError: If tau_max is negative
    """
    if tau_max < 0:
        raise OracleError(f"tau_max must be >= 0, got {tau_max}")
    distances = mdp.distance_matrix()
    table = TdmTable.zeros(mdp, tau_max)
    q = table.values
    q[..., 0] = -distances[mdp.next_state]
    for tau in range(1, tau_max + 1):
        best_next = q[..., tau - 1].max(axis=1)
        q[..., tau] = best_next[mdp.next_state]
    logger.debug(f"dp_solve: {mdp.name}, S={mdp.n_states}, A={mdp.n_actions}, tau_max={tau_max}")
    return table


# ============================================================================
# Tabular Learning
# ============================================================================

def tabular_tdm_update(
    table: TdmTable,
    distances: np.ndarray,
    s: int,
    a: int,
    s_next: int,
    tau: int,
    alpha: float,
    goals: Optional[np.ndarray] = None,
) -> None:
    """
    In-place TD update of Q[s, a, goals, tau] from one transition.

    ``goals`` defaults to every goal.
    """
    q = table.values
    goal_idx = slice(None) if goals is None else goals
    if tau == 0:
        target = -distances[s_next, goal_idx]
    else:
        target = q[s_next, :, :, tau - 1].max(axis=0)[goal_idx]
    q[s, a, goal_idx, tau] += alpha * (target - q[s, a, goal_idx, tau])


def tabular_tdm_sweep(table: TdmTable, mdp: TabularMdp, alpha: float = 1.0) -> None:
    """One ordered sweep: ascending tau, every (s, a), every goal."""
    distances = mdp.distance_matrix()
    for tau in range(table.tau_max + 1):
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                tabular_tdm_update(table, distances, s, a, int(mdp.next_state[s, a]), tau, alpha)


def tabular_tdm_qlearning(
    mdp: TabularMdp,
    tau_max: int,
    episodes: int,
    alpha: float,
    epsilon: float,
    rng: np.random.Generator,
    episode_length: Optional[int] = None,
    relabels_per_transition: Optional[int] = None,
) -> TdmTable:
    """
    Off-policy tabular TDM learning from epsilon-greedy episodes.

    Each episode starts in a uniform state with a uniform goal and acts
    epsilon-greedily on Q[s, :, goal, remaining - 1].  Every transition is
    relabeled: by default exhaustively (all goals, tau ascending), or with
    ``relabels_per_transition`` random (goal, tau) pairs.

    Raises:
        ConfigError: If alpha is outside (0, 1] or epsilon outside [0, 1]
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"learning rate alpha must lie in (0, 1], got {alpha}")
    check_range(epsilon, 0.0, 1.0, "exploration epsilon")
    table = TdmTable.zeros(mdp, tau_max)
    distances = mdp.distance_matrix()
    length = episode_length or tau_max + 1

    for _ in range(episodes):
        s = int(rng.integers(mdp.n_states))
        goal = int(rng.integers(mdp.n_states))
        for t in range(length):
            tau_now = min(length - t - 1, tau_max)
            if rng.uniform() < epsilon:
                a = int(rng.integers(mdp.n_actions))
            else:
                a = int(np.argmax(table.values[s, :, goal, tau_now]))
            s_next = tabular_step(mdp, s, a)
            if relabels_per_transition is None:
                for tau in range(tau_max + 1):
                    tabular_tdm_update(table, distances, s, a, s_next, tau, alpha)
            else:
                for _ in range(relabels_per_transition):
                    g = np.array([int(rng.integers(mdp.n_states))])
                    tau = int(rng.integers(tau_max + 1))
                    tabular_tdm_update(table, distances, s, a, s_next, tau, alpha, goals=g)
            s = s_next

    logger.info(f"tabular TDM learning on {mdp.name}: {episodes} episodes, tau_max={tau_max}")
    return table


# ============================================================================
# Comparison and Invariants
# ============================================================================

def compare_tables(a: TdmTable, b: TdmTable) -> Tuple[float, int]:
    """
    Max absolute difference and greedy-argmax mismatches.

    A (s, g, tau) cell mismatches when the sets of greedy actions of the two
    tables do not intersect.

    Raises:
        OracleError: If the shapes differ
    """
    if a.shape != b.shape:
        raise OracleError(f"table shapes differ: {a.shape} vs {b.shape}")
    if a.values.size == 0:
        return 0.0, 0
    max_abs = float(np.max(np.abs(a.values - b.values)))
    overlap = np.any(a.greedy_sets() & b.greedy_sets(), axis=1)
    return max_abs, int(np.sum(~overlap))


def reachability(mdp: TabularMdp, steps: int) -> List[np.ndarray]:
    """reach[k][s, g] is True when g is reachable from s in at most k steps."""
    reach = [np.eye(mdp.n_states, dtype=bool)]
    for _ in range(steps):
        prev = reach[-1]
        reach.append(prev | np.any(prev[mdp.next_state], axis=1))
    return reach


def table_invariant_report(table: TdmTable, mdp: TabularMdp) -> pd.DataFrame:
    """
    Check the structural properties every exact table must satisfy.

    Rows: non-positivity, tau = 0 exactness, monotonicity in tau, and zero
    value whenever the goal is reachable in time.
    """
    q = table.values
    distances = mdp.distance_matrix()
    reach = reachability(mdp, table.tau_max)
    zero_expected = np.stack([r[mdp.next_state] for r in reach], axis=-1)

    checks = [
        ('non_positive', float(max(q.max(), 0.0))),
        ('tau0_exact', float(np.max(np.abs(q[..., 0] + distances[mdp.next_state])))),
        ('monotone_in_tau', float(max(0.0, -np.min(np.diff(q, axis=3)))) if table.tau_max > 0 else 0.0),
        ('zero_when_reachable', float(np.max(np.abs(q[zero_expected]), initial=0.0))),
    ]
    return pd.DataFrame(
        [{'check': name, 'worst_violation': worst, 'passed': worst <= TIE_TOLERANCE} for name, worst in checks]
    )
