"""
Comparison learners.

    ddpg: goal-conditioned DDPG with a dense task-distance reward
    dynamics: learned dynamics model with random-shooting MPC (mbmpc)
"""

from tdm_lab.baselines.ddpg import DdpgAgent, DdpgBaselineConfig, ddpg_train, dense_reward
from tdm_lab.baselines.dynamics import (
    DynamicsModel,
    ModelBasedAgent,
    ModelBasedConfig,
    NormalizationStats,
    fit_dynamics,
    shooting_mpc,
)

__all__ = [
    'DdpgBaselineConfig',
    'DdpgAgent',
    'ddpg_train',
    'dense_reward',
    'NormalizationStats',
    'DynamicsModel',
    'fit_dynamics',
    'shooting_mpc',
    'ModelBasedConfig',
    'ModelBasedAgent',
]
