"""
Component registry for TDM Lab.

Environments are registered by name (``gridchain5``, ``pointmass`` ...) and
learners by algorithm key (``tdm``, ``ddpg``, ``mbmpc``).  The config file
refers to both by these names, and the CLI lists them in its help text.

Educational Notes:
- Registry Pattern: Centralized management of pluggable components
- Factories are registered instead of instances, since every seed needs
  fresh, independent objects
- Unknown names raise ConfigError so typos surface before any compute

Design Pattern: Registry Pattern
Purpose: Provide a centralized location for component discovery
"""

import logging
from typing import Any, Callable, Dict, List

from tdm_lab.core.interfaces import BaseAgent, BaseEnvironment
from tdm_lab.core.models import ConfigError

logger = logging.getLogger(__name__)

EnvironmentFactory = Callable[..., BaseEnvironment]
LearnerFactory = Callable[..., BaseAgent]


class ComponentRegistry:
    """
    Central registry mapping names to environment and learner factories.

    Example Usage:
        >>> registry = ComponentRegistry()
        >>> registry.register_environment('pointmass', PointMassEnv)
        >>> env = registry.make_environment('pointmass')
    """

    def __init__(self):
        self._environments: Dict[str, EnvironmentFactory] = {}
        self._learners: Dict[str, LearnerFactory] = {}
        logger.debug("ComponentRegistry initialized")

    # ========================================================================
    # Environment Management
    # ========================================================================

    def register_environment(self, name: str, factory: EnvironmentFactory) -> None:
        """
        Register an environment factory.

        Design Choice:
        If a name is already registered, we log a warning and overwrite it,
        mirroring plugin replacement.
        """
        key = name.lower()
        if key in self._environments:
            logger.warning(f"Overwriting environment factory for '{key}'")
        self._environments[key] = factory
        logger.debug(f"Registered environment: {key}")

    def make_environment(self, name: str, **options: Any) -> BaseEnvironment:
        """
        Build a fresh environment by name.

        Raises:
            ConfigError: If no environment is registered under ``name``
        """
        key = name.lower()
        factory = self._environments.get(key)
        if factory is None:
            raise ConfigError(
                f"unknown environment '{name}'. "
                f"Available: {', '.join(self.list_environments())}"
            )
        env = factory(**options)
        if not isinstance(env, BaseEnvironment):
            raise TypeError(
                f"factory for '{key}' must build a BaseEnvironment, got {type(env).__name__}"
            )
        return env

    def list_environments(self) -> List[str]:
        return sorted(self._environments.keys())

    # ========================================================================
    # Learner Management
    # ========================================================================

    def register_learner(self, algo: str, factory: LearnerFactory) -> None:
        key = algo.lower()
        if key in self._learners:
            logger.warning(f"Overwriting learner factory for '{key}'")
        self._learners[key] = factory
        logger.debug(f"Registered learner: {key}")

    def get_learner(self, algo: str) -> LearnerFactory:
        """
        Look up a learner factory by algorithm key.

        Raises:
            ConfigError: If no learner is registered under ``algo``
        """
        factory = self._learners.get(algo.lower())
        if factory is None:
            raise ConfigError(
                f"unknown algo '{algo}'. Available: {', '.join(self.list_learners())}"
            )
        return factory

    def list_learners(self) -> List[str]:
        return sorted(self._learners.keys())

    def get_stats(self) -> Dict[str, int]:
        return {
            'environments': len(self._environments),
            'learners': len(self._learners),
        }

    def __repr__(self) -> str:
        stats = self.get_stats()
        return (
            f"ComponentRegistry("
            f"environments={stats['environments']}, "
            f"learners={stats['learners']})"
        )
