"""
Environment specification shared by all environments.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from tdm_lab.core.models import ConfigError, ShapeError


@dataclass
class EnvSpec:
    """
    Static description of a goal-conditioned environment.

    The goal map is the affine map phi(s) = goal_matrix @ s + goal_offset;
    selection maps are the special case of a 0/1 matrix.  ``task_indices``
    names the goal-space components the task reward (and the final-distance
    metric) looks at; the remaining components are free for planners.

    Attributes:
        name: Registry name (e.g. 'pointmass')
        state_dim / action_dim / goal_dim: Vector widths
        action_low / action_high: Per-dimension closed action bounds
        horizon: Episode length T
        goal_matrix / goal_offset: Affine goal-map descriptor
        goal_low / goal_high: Axis-aligned goal-sampling box
        task_indices: Goal components used by the task reward
        discrete_actions: Number of discrete actions (0 for continuous tasks)
        goal_features: Human-readable goal-map label ('position', 'full', ...)
    """

    name: str
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    horizon: int
    goal_matrix: np.ndarray
    goal_offset: np.ndarray
    goal_low: np.ndarray
    goal_high: np.ndarray
    task_indices: Tuple[int, ...] = ()
    discrete_actions: int = 0
    goal_features: str = 'full'

    def __post_init__(self):
        self.action_low = np.asarray(self.action_low, dtype=float)
        self.action_high = np.asarray(self.action_high, dtype=float)
        self.goal_matrix = np.asarray(self.goal_matrix, dtype=float)
        self.goal_offset = np.asarray(self.goal_offset, dtype=float)
        self.goal_low = np.asarray(self.goal_low, dtype=float)
        self.goal_high = np.asarray(self.goal_high, dtype=float)

        if self.horizon < 1:
            raise ConfigError(f"{self.name}: horizon must be >= 1, got {self.horizon}")
        if self.action_low.shape != (self.action_dim,) or self.action_high.shape != (self.action_dim,):
            raise ShapeError(f"{self.name}: action bounds must have shape ({self.action_dim},)")
        if not (np.all(np.isfinite(self.action_low)) and np.all(np.isfinite(self.action_high))):
            raise ConfigError(f"{self.name}: action bounds must be finite")
        if np.any(self.action_low > self.action_high):
            raise ConfigError(f"{self.name}: empty action interval")
        if self.goal_matrix.shape != (self.goal_dim, self.state_dim):
            raise ShapeError(
                f"{self.name}: goal map shape {self.goal_matrix.shape} "
                f"!= ({self.goal_dim}, {self.state_dim})"
            )
        if self.goal_offset.shape != (self.goal_dim,):
            raise ShapeError(f"{self.name}: goal offset must have shape ({self.goal_dim},)")
        if not self.task_indices:
            self.task_indices = tuple(range(self.goal_dim))
        self.task_indices = tuple(int(i) for i in self.task_indices)

    @property
    def goal_dim(self) -> int:
        return int(self.goal_matrix.shape[0]) if np.ndim(self.goal_matrix) == 2 else 0

    @property
    def action_range(self) -> np.ndarray:
        return self.action_high - self.action_low


def selection_matrix(indices: Sequence[int], state_dim: int) -> np.ndarray:
    """0/1 matrix selecting ``indices`` out of a state of width ``state_dim``."""
    matrix = np.zeros((len(indices), state_dim))
    for row, col in enumerate(indices):
        matrix[row, col] = 1.0
    return matrix
