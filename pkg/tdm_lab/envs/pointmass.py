"""
Point mass: a planar double integrator.

State (px, py, vx, vy); action is a clipped acceleration in [-1, 1]^2.

    position <- position + velocity * dt
    velocity <- clip(velocity + acceleration * dt, -2, 2)

Position uses the velocity from before the step, so a fresh push moves
the mass only from the following step on.  Goals are positions sampled
uniformly in [-1, 1]^2.
"""

import numpy as np

from tdm_lab.core.interfaces import BaseEnvironment
from tdm_lab.core.models import ConfigError
from tdm_lab.envs.spec import EnvSpec, selection_matrix

DT = 0.1
MAX_SPEED = 2.0
MAX_ACCEL = 1.0
DEFAULT_HORIZON = 50


class PointMassEnv(BaseEnvironment):
    """Double-integrator point mass with position-only goals."""

    def __init__(self, horizon: int = DEFAULT_HORIZON, goal_features: str = 'position'):
        if goal_features == 'position':
            goal_matrix = selection_matrix([0, 1], 4)
            goal_low, goal_high = -np.ones(2), np.ones(2)
        elif goal_features == 'full':
            goal_matrix = np.eye(4)
            goal_low = np.array([-1.0, -1.0, -MAX_SPEED, -MAX_SPEED])
            goal_high = -goal_low
        else:
            raise ConfigError(f"pointmass goal features must be 'position' or 'full', got {goal_features}")

        super().__init__(EnvSpec(
            name='pointmass',
            state_dim=4,
            action_dim=2,
            action_low=-MAX_ACCEL * np.ones(2),
            action_high=MAX_ACCEL * np.ones(2),
            horizon=horizon,
            goal_matrix=goal_matrix,
            goal_offset=np.zeros(goal_matrix.shape[0]),
            goal_low=goal_low,
            goal_high=goal_high,
            task_indices=(0, 1),
            goal_features=goal_features,
        ))

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(4)

    def sample_goal(self, rng: np.random.Generator) -> np.ndarray:
        goal = np.zeros(self.spec.goal_dim)
        goal[:2] = rng.uniform(-1.0, 1.0, size=2)
        return goal

    def dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        position, velocity = states[:, :2], states[:, 2:]
        new_position = position + velocity * DT
        new_velocity = np.clip(velocity + actions * DT, -MAX_SPEED, MAX_SPEED)
        return np.concatenate([new_position, new_velocity], axis=1)
