"""
Planar two-joint reacher with unit links.

State (theta1, theta2, tip_x, tip_y).  Actions command the two joint
velocities directly (bounded by +-pi rad/s); angles are integrated with
dt = 0.1 and wrapped to (-pi, pi].  The tip features are recomputed by
forward kinematics after every step, which keeps the goal map a plain
feature selection.
"""

import numpy as np

from tdm_lab.core.interfaces import BaseEnvironment
from tdm_lab.core.models import ConfigError
from tdm_lab.envs.spec import EnvSpec, selection_matrix

DT = 0.1
LINK_LENGTHS = (1.0, 1.0)
DEFAULT_HORIZON = 50


def wrap_angle(theta: np.ndarray) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    return -((-np.asarray(theta, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi)


def forward_kinematics(angles: np.ndarray) -> np.ndarray:
    """Tip position for angles of shape (..., 2)."""
    angles = np.asarray(angles, dtype=float)
    l1, l2 = LINK_LENGTHS
    t1, t12 = angles[..., 0], angles[..., 0] + angles[..., 1]
    x = l1 * np.cos(t1) + l2 * np.cos(t12)
    y = l1 * np.sin(t1) + l2 * np.sin(t12)
    return np.stack([x, y], axis=-1)


def reacher_state(angles: np.ndarray) -> np.ndarray:
    """Full state vector(s) for the given joint angles."""
    angles = wrap_angle(angles)
    return np.concatenate([angles, forward_kinematics(angles)], axis=-1)


class ReacherEnv(BaseEnvironment):
    """
    Two-joint reacher.

    goal_features:
        'full' -- goals are full states (joint angles and tip), the task pins
                  the tip and leaves the angles free for planners
        'tip'  -- goals are tip positions only
    """

    def __init__(self, horizon: int = DEFAULT_HORIZON, goal_features: str = 'full'):
        reach = sum(LINK_LENGTHS)
        if goal_features == 'full':
            goal_matrix = np.eye(4)
            goal_low = np.array([-np.pi, -np.pi, -reach, -reach])
            task_indices = (2, 3)
        elif goal_features == 'tip':
            goal_matrix = selection_matrix([2, 3], 4)
            goal_low = np.array([-reach, -reach])
            task_indices = (0, 1)
        else:
            raise ConfigError(f"reacher goal features must be 'full' or 'tip', got {goal_features}")

        super().__init__(EnvSpec(
            name='reacher2',
            state_dim=4,
            action_dim=2,
            action_low=-np.pi * np.ones(2),
            action_high=np.pi * np.ones(2),
            horizon=horizon,
            goal_matrix=goal_matrix,
            goal_offset=np.zeros(goal_matrix.shape[0]),
            goal_low=goal_low,
            goal_high=-goal_low,
            task_indices=task_indices,
            goal_features=goal_features,
        ))

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return reacher_state(np.zeros(2))

    def sample_goal(self, rng: np.random.Generator) -> np.ndarray:
        # Goals come from reachable configurations so that full-state goals stay consistent.
        angles = rng.uniform(-np.pi, np.pi, size=2)
        return self.goal_map(reacher_state(angles))

    def dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return reacher_state(states[:, :2] + actions * DT)
