"""
Terminal task rewards in goal space.

A TaskReward pins some goal-space components to target values and leaves
the rest free:

    r_c(v) = -sum over fixed j of |v_j - target_j|

Goal reaching pins every component.  A feature target (for example only the
reacher tip) leaves the other components for planners to choose.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from tdm_lab.core.models import ConfigError
from tdm_lab.utils.validation import check_dim


@dataclass
class TaskReward:
    """
    Attributes:
        targets: Goal-space vector; only the fixed components are read
        fixed_indices: Goal components pinned by the task
        goal_low / goal_high: Goal box the free components are sampled from
    """

    targets: np.ndarray
    fixed_indices: Tuple[int, ...]
    goal_low: np.ndarray
    goal_high: np.ndarray

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=float)
        self.goal_low = np.asarray(self.goal_low, dtype=float)
        self.goal_high = np.asarray(self.goal_high, dtype=float)
        self.fixed_indices = tuple(int(i) for i in self.fixed_indices)
        check_dim(self.goal_low.shape[0], self.goal_dim, "task goal box")
        check_dim(self.goal_high.shape[0], self.goal_dim, "task goal box")
        if len(set(self.fixed_indices)) != len(self.fixed_indices):
            raise ConfigError(f"duplicate fixed indices {self.fixed_indices}")
        if any(i < 0 or i >= self.goal_dim for i in self.fixed_indices):
            raise ConfigError(f"fixed indices {self.fixed_indices} out of range for goal dim {self.goal_dim}")

    @classmethod
    def goal_reaching(cls, goal: np.ndarray, goal_low: np.ndarray, goal_high: np.ndarray) -> "TaskReward":
        goal = np.asarray(goal, dtype=float)
        return cls(goal, tuple(range(goal.shape[0])), goal_low, goal_high)

    @classmethod
    def feature_target(
        cls,
        goal: np.ndarray,
        fixed_indices: Sequence[int],
        goal_low: np.ndarray,
        goal_high: np.ndarray,
    ) -> "TaskReward":
        return cls(np.asarray(goal, dtype=float), tuple(fixed_indices), goal_low, goal_high)

    @property
    def goal_dim(self) -> int:
        return int(self.targets.shape[0])

    @property
    def free_indices(self) -> Tuple[int, ...]:
        fixed = set(self.fixed_indices)
        return tuple(j for j in range(self.goal_dim) if j not in fixed)

    def evaluate(self, vectors: np.ndarray) -> np.ndarray:
        """r_c for a batch of goal-space vectors of shape (n, G); returns shape (n,)."""
        v = np.asarray(vectors, dtype=float)
        v = v[None, :] if v.ndim == 1 else v
        idx = list(self.fixed_indices)
        return -np.abs(v[:, idx] - self.targets[idx]).sum(axis=1)

    def sample_candidates(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """
        Goal candidates with fixed components pinned and free ones uniform in the box.

        Draws are made as one (count, n_free) block, so for a shared seed the
        first k candidates do not depend on ``count``.  With no free
        components a single candidate is returned.
        """
        free = list(self.free_indices)
        if not free:
            return self.targets[None, :].copy()
        unit = rng.uniform(size=(count, len(free)))
        candidates = np.tile(self.targets, (count, 1))
        low, high = self.goal_low[free], self.goal_high[free]
        candidates[:, free] = low + (high - low) * unit
        return candidates
