"""Task rewards and the planners that turn a trained TDM into actions."""

from tdm_lab.control.planners import (
    POLICY_MODES,
    PlannerConfig,
    PlanResult,
    direct_policy,
    explicit_mpc,
    plan_candidates,
    skip_k_plan,
)
from tdm_lab.control.task import TaskReward

__all__ = [
    'TaskReward',
    'POLICY_MODES',
    'PlannerConfig',
    'PlanResult',
    'direct_policy',
    'plan_candidates',
    'explicit_mpc',
    'skip_k_plan',
]
