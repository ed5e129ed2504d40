"""
Temporal difference models: networks, targets and losses, training loop.

Modules:
    networks: TdmCritic (q = -|f(s, a, g, tau) - g|_1) and TdmActor
    losses: Bellman targets, critic regression, actor objective
    trainer: TrainConfig, TdmAgent and train()
"""

from tdm_lab.tdm.losses import (
    SupervisionMode,
    actor_objective_gradient,
    actor_update,
    bellman_targets,
    critic_loss_and_upstream,
    critic_update,
    greedy_discrete_actions,
)
from tdm_lab.tdm.networks import TdmActor, TdmCritic, tdm_value
from tdm_lab.tdm.trainer import TdmAgent, TrainConfig, train

__all__ = [
    'TdmCritic',
    'TdmActor',
    'tdm_value',
    'SupervisionMode',
    'greedy_discrete_actions',
    'bellman_targets',
    'critic_loss_and_upstream',
    'critic_update',
    'actor_objective_gradient',
    'actor_update',
    'TrainConfig',
    'TdmAgent',
    'train',
]
