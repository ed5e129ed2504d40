"""
Experiment configuration.

Config files are flat ``key = value`` lines; ``#`` starts a comment and
blank lines are ignored.  Lists are comma separated.  Every key has a
default and unknown keys are rejected, so a typo never silently falls back
to a default.

Example:

    env = pointmass
    algo = tdm
    seeds = 0, 1, 2
    env_step_budget = 25000
    eval_cadence = 1000
    supervision_mode = vectorized
    tau_max = 49

Educational Notes:
- Field types drive value coercion (int, float, bool, str, list of int)
- to_text() is canonical, so config_hash() identifies a run configuration
- The learner-specific configs are derived views of this flat record
"""

import dataclasses
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from tdm_lab.baselines.ddpg import DdpgBaselineConfig
from tdm_lab.baselines.dynamics import ModelBasedConfig
from tdm_lab.control.planners import POLICY_MODES, PlannerConfig
from tdm_lab.core.models import ConfigError, PlanningError
from tdm_lab.replay.buffer import RelabelStrategy
from tdm_lab.tdm.losses import SupervisionMode
from tdm_lab.tdm.trainer import TrainConfig
from tdm_lab.utils.validation import check_range, validate_file_exists

logger = logging.getLogger(__name__)

ALGOS = ('tdm', 'ddpg', 'mbmpc')
SWEEP_KEYS = ('supervision_mode', 'tau_max', 'updates_per_step')
_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


@dataclass
class ExperimentConfig:
    """
    Full description of a run.

    Sentinels: ``horizon = 0`` keeps the environment's default horizon,
    ``tau_max = -1`` means horizon - 1, ``min_replay = 0`` means one batch,
    ``future_window = 0`` means to the end of the trajectory and
    ``goal_features = default`` keeps the environment's default goal map.
    """

    # run
    env: str = 'pointmass'
    algo: str = 'tdm'
    goal_features: str = 'default'
    horizon: int = 0
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    env_step_budget: int = 25_000
    eval_cadence: int = 1_000
    eval_episodes: int = 10
    output_dir: str = 'runs/experiment'
    workers: int = 1
    save_checkpoints: bool = True

    # shared learner settings
    batch_size: int = 128
    updates_per_step: int = 5
    polyak: float = 0.999
    exploration_noise: float = 0.1
    critic_lr: float = 1e-3
    actor_lr: float = 1e-4
    hidden_sizes: List[int] = field(default_factory=lambda: [64, 64])
    replay_capacity: int = 100_000
    min_replay: int = 0
    reward_scale: float = 1.0

    # tdm
    tau_max: int = -1
    supervision_mode: str = 'vectorized'
    relabel_strategy: str = 'future'
    future_window: int = 0
    policy: str = 'direct'
    candidates: int = 1024
    skip_k: int = 1

    # ddpg
    gamma: float = 0.99

    # mbmpc
    mpc_horizon: int = 15
    mpc_sequences: int = 512
    warmup_rollouts: int = 20
    model_lr: float = 1e-3

    def __post_init__(self):
        self.validate()

    # ========================================================================
    # Validation
    # ========================================================================

    def validate(self) -> None:
        """
        Raises:
            ConfigError: On any invalid value
        """
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}, got '{self.algo}'")
        if self.env_step_budget < 0:
            raise ConfigError(f"env_step_budget must be >= 0, got {self.env_step_budget}")
        if self.eval_cadence < 0:
            raise ConfigError(f"eval_cadence must be >= 0, got {self.eval_cadence}")
        if self.eval_episodes < 1:
            raise ConfigError(f"eval_episodes must be >= 1, got {self.eval_episodes}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0, got {self.horizon}")
        if self.tau_max < -1:
            raise ConfigError(f"tau_max must be >= 0 (or -1 for horizon - 1), got {self.tau_max}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.updates_per_step < 0:
            raise ConfigError(f"updates_per_step must be >= 0, got {self.updates_per_step}")
        if self.replay_capacity < 1:
            raise ConfigError(f"replay_capacity must be >= 1, got {self.replay_capacity}")
        if self.min_replay < 0:
            raise ConfigError(f"min_replay must be >= 0, got {self.min_replay}")
        if not 0.0 < self.polyak <= 1.0:
            raise ConfigError(f"polyak must lie in (0, 1], got {self.polyak}")
        for name in ('critic_lr', 'actor_lr', 'model_lr', 'reward_scale'):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.exploration_noise < 0.0:
            raise ConfigError(f"exploration_noise must be >= 0, got {self.exploration_noise}")
        check_range(self.gamma, 0.0, 1.0, "gamma")
        if self.future_window < 0:
            raise ConfigError(f"future_window must be >= 0, got {self.future_window}")
        if self.policy not in POLICY_MODES:
            raise ConfigError(f"policy must be one of {POLICY_MODES}, got '{self.policy}'")
        SupervisionMode.parse(self.supervision_mode)
        RelabelStrategy.parse(self.relabel_strategy)

    # ========================================================================
    # Parsing and Serialization
    # ========================================================================

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def coerce(cls, key: str, raw: str) -> Any:
        """
        Convert a raw string to the type of field ``key``.

        Raises:
            ConfigError: On unknown keys or values that do not parse
        """
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        if key not in types:
            raise ConfigError(f"unknown config key '{key}'")
        kind = types[key]
        text = raw.strip()
        try:
            if kind is bool:
                lowered = text.lower()
                if lowered in _TRUE:
                    return True
                if lowered in _FALSE:
                    return False
                raise ConfigError(f"bad value for '{key}': {raw!r} (not a boolean)")
            if kind is int:
                return int(text)
            if kind is float:
                return float(text)
            if kind == List[int]:
                return [int(v) for v in text.split(',') if v.strip()]
            return text
        except ValueError as e:
            raise ConfigError(f"bad value for '{key}': {raw!r} ({e})")

    @classmethod
    def parse(cls, text: str, overrides: Optional[Dict[str, str]] = None) -> "ExperimentConfig":
        """Parse ``key = value`` text; ``overrides`` are applied after the file."""
        values: Dict[str, Any] = {}
        for number, raw_line in enumerate(text.splitlines(), start=1):
            line = raw_line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"line {number}: expected 'key = value', got {raw_line!r}")
            key, raw = (part.strip() for part in line.split('=', 1))
            if key in values:
                raise ConfigError(f"line {number}: duplicate key '{key}'")
            values[key] = cls.coerce(key, raw)
        for key, raw in (overrides or {}).items():
            values[key] = cls.coerce(key, raw)
        return cls(**values)

    @classmethod
    def from_file(cls, path: Union[str, Path], overrides: Optional[Dict[str, str]] = None) -> "ExperimentConfig":
        path = validate_file_exists(Path(path), "config file")
        cfg = cls.parse(path.read_text(encoding='utf-8'), overrides)
        logger.info(f"Loaded config {path} (hash {cfg.config_hash()[:12]})")
        return cfg

    def to_text(self) -> str:
        """Canonical ``key = value`` form with every field."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                value = ', '.join(str(v) for v in value)
            elif isinstance(value, bool):
                value = 'true' if value else 'false'
            lines.append(f"{f.name} = {value}")
        return '\n'.join(lines) + '\n'

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()

    def with_value(self, key: str, raw: str) -> "ExperimentConfig":
        """Copy with one field replaced from its string form."""
        return dataclasses.replace(self, **{key: self.coerce(key, raw)})

    # ========================================================================
    # Derived Configurations
    # ========================================================================

    def env_options(self) -> Dict[str, Any]:
        options: Dict[str, Any] = {}
        if self.horizon > 0:
            options['horizon'] = self.horizon
        if self.goal_features != 'default':
            options['goal_features'] = self.goal_features
        return options

    def planner_config(self) -> PlannerConfig:
        try:
            return PlannerConfig(candidates=self.candidates, skip_k=self.skip_k, policy=self.policy)
        except PlanningError as e:
            raise ConfigError(str(e))

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            updates_per_step=self.updates_per_step,
            polyak=self.polyak,
            exploration_noise=self.exploration_noise,
            tau_max=None if self.tau_max < 0 else self.tau_max,
            critic_lr=self.critic_lr,
            actor_lr=self.actor_lr,
            hidden_sizes=list(self.hidden_sizes),
            supervision=SupervisionMode.parse(self.supervision_mode),
            relabel=RelabelStrategy.parse(self.relabel_strategy),
            future_window=self.future_window or None,
            replay_capacity=self.replay_capacity,
            min_replay=self.min_replay or None,
            reward_scale=self.reward_scale,
            planner=self.planner_config(),
        )

    def ddpg_config(self) -> DdpgBaselineConfig:
        return DdpgBaselineConfig(
            gamma=self.gamma,
            batch_size=self.batch_size,
            updates_per_step=self.updates_per_step,
            polyak=self.polyak,
            exploration_noise=self.exploration_noise,
            critic_lr=self.critic_lr,
            actor_lr=self.actor_lr,
            hidden_sizes=list(self.hidden_sizes),
            replay_capacity=self.replay_capacity,
            min_replay=self.min_replay or None,
            reward_scale=self.reward_scale,
        )

    def model_based_config(self) -> ModelBasedConfig:
        return ModelBasedConfig(
            horizon=self.mpc_horizon,
            sequences=self.mpc_sequences,
            warmup_rollouts=self.warmup_rollouts,
            batch_size=self.batch_size,
            learning_rate=self.model_lr,
            hidden_sizes=list(self.hidden_sizes),
            replay_capacity=self.replay_capacity,
        )
