"""
Environments for TDM Lab.

Available Environments:
    gridchain5, grid3x3, grid9x9: One-hot views of tabular MDPs
    pointmass: Planar double integrator
    reacher2: Two-joint planar reacher
"""

from functools import partial

from tdm_lab.core.registry import ComponentRegistry
from tdm_lab.envs.pointmass import PointMassEnv
from tdm_lab.envs.reacher import ReacherEnv
from tdm_lab.envs.spec import EnvSpec, selection_matrix
from tdm_lab.envs.tabular import (
    BUILTIN_MDPS,
    TabularEnvironment,
    TabularMdp,
    load_mdp,
    make_chain,
    make_grid,
    make_tabular_env,
    resolve_mdp,
    tabular_step,
)


def register_builtin_environments(registry: ComponentRegistry) -> None:
    """Register every built-in environment under its config name."""
    registry.register_environment('pointmass', PointMassEnv)
    registry.register_environment('reacher2', ReacherEnv)
    for name in BUILTIN_MDPS:
        registry.register_environment(name, partial(make_tabular_env, name))


__all__ = [
    'EnvSpec',
    'selection_matrix',
    'PointMassEnv',
    'ReacherEnv',
    'TabularMdp',
    'TabularEnvironment',
    'tabular_step',
    'make_chain',
    'make_grid',
    'make_tabular_env',
    'load_mdp',
    'resolve_mdp',
    'register_builtin_environments',
]
