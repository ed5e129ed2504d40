"""
Experiment orchestration.

Output layout of one experiment:

    <output_dir>/config.txt            canonical config (to_text)
    <output_dir>/seed_<k>/metrics.csv  evaluation curve of seed k
    <output_dir>/seed_<k>/training.csv per-episode training metrics
    <output_dir>/seed_<k>/manifest.txt checkpoint manifest
    <output_dir>/seed_<k>/*.ckpt       network checkpoints
    <output_dir>/aggregate.csv         curves combined across seeds

Evaluation points fall at every multiple of ``eval_cadence`` env steps up to
the budget, and always at the budget itself (only there when the cadence is 0).  At each point the
learner is frozen and runs ``eval_episodes`` noise-free episodes; those
transitions are counted in ``eval_env_steps`` and never in ``env_steps``.

Educational Notes:
- Seeds are isolated: each worker builds its own registry, environment
  and agent, so results do not depend on the worker count
- A seed that fails mid-run still flushes its partial curves and is listed
  in the aggregate's failed_seeds column
- Learners are looked up through the ComponentRegistry by algo key
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from tdm_lab.baselines.ddpg import DdpgAgent
from tdm_lab.baselines.dynamics import ModelBasedAgent
from tdm_lab.control.planners import PlannerConfig
from tdm_lab.core.interfaces import BaseAgent, BaseEnvironment
from tdm_lab.core.models import (
    ConfigError,
    EpisodeResult,
    InvariantViolation,
    NumericHealthError,
    TdmLabError,
)
from tdm_lab.core.registry import ComponentRegistry
from tdm_lab.core.rollout import EVAL_STREAM, TRAINING_COLUMNS, TrainingRollout, derive_seed, run_episode, training_row
from tdm_lab.envs import register_builtin_environments
from tdm_lab.harness.config import SWEEP_KEYS, ExperimentConfig
from tdm_lab.harness.metrics import (
    ABLATION_COLUMNS,
    EvalPoint,
    ablation_rows,
    aggregate_from_files,
    seed_frame,
)
from tdm_lab.nn.checkpoint import load_params, save_params
from tdm_lab.tdm.trainer import TdmAgent, TrainConfig
from tdm_lab.utils.csv_writer import write_frame, write_rows
from tdm_lab.utils.logging_config import TemporaryLogLevel, configure_worker_logging, package_level
from tdm_lab.utils.validation import validate_file_exists

logger = logging.getLogger(__name__)

CONFIG_FILE = 'config.txt'
AGGREGATE_FILE = 'aggregate.csv'
METRICS_FILE = 'metrics.csv'
TRAINING_FILE = 'training.csv'
MANIFEST_FILE = 'manifest.txt'
REPLAY_FILE = 'replay.csv'
ABLATION_FILE = 'ablation.csv'


# ============================================================================
# Component Wiring
# ============================================================================

def _make_tdm(env: BaseEnvironment, cfg: ExperimentConfig, seed: int) -> BaseAgent:
    return TdmAgent(env, cfg.train_config(), seed)


def _make_ddpg(env: BaseEnvironment, cfg: ExperimentConfig, seed: int) -> BaseAgent:
    return DdpgAgent(env, cfg.ddpg_config(), seed)


def _make_mbmpc(env: BaseEnvironment, cfg: ExperimentConfig, seed: int) -> BaseAgent:
    return ModelBasedAgent(env, cfg.model_based_config(), seed)


def create_registry() -> ComponentRegistry:
    """Registry with every built-in environment and learner."""
    registry = ComponentRegistry()
    register_builtin_environments(registry)
    registry.register_learner('tdm', _make_tdm)
    registry.register_learner('ddpg', _make_ddpg)
    registry.register_learner('mbmpc', _make_mbmpc)
    return registry


def check_config(cfg: ExperimentConfig, registry: Optional[ComponentRegistry] = None) -> None:
    """
    Surface every config problem before any compute starts.

    Raises:
        ConfigError: Unknown env or algo, or an invalid derived config
    """
    registry = registry or create_registry()
    cfg.validate()
    registry.get_learner(cfg.algo)
    try:
        env = registry.make_environment(cfg.env, **cfg.env_options())
    except TypeError as e:
        raise ConfigError(f"environment '{cfg.env}' rejected options {cfg.env_options()}: {e}")
    derived = {'tdm': cfg.train_config, 'ddpg': cfg.ddpg_config, 'mbmpc': cfg.model_based_config}
    derived[cfg.algo]()
    if cfg.algo == 'tdm' and cfg.tau_max >= env.spec.horizon:
        logger.warning(f"tau_max={cfg.tau_max} exceeds horizon - 1 = {env.spec.horizon - 1}")


# ============================================================================
# Evaluation
# ============================================================================

def eval_schedule(budget: int, cadence: int) -> List[int]:
    """Env-step counts at which evaluations run."""
    if budget <= 0:
        return []
    if cadence <= 0:
        return [budget]
    points = list(range(cadence, budget + 1, cadence))
    if budget % cadence:
        points.append(budget)
    return points


def evaluate_agent(agent: BaseAgent, env: BaseEnvironment, seed: int, episodes: int) -> List[EpisodeResult]:
    """
    Noise-free episodes; episode e always resets with the same derived seed,
    so every evaluation point of a run sees the same start states and goals.
    """
    def policy(state, goal, steps_remaining):
        return agent.act(state, goal, steps_remaining, explore=False)

    return [run_episode(env, policy, derive_seed(seed, EVAL_STREAM, e)) for e in range(episodes)]


# ============================================================================
# Checkpoints
# ============================================================================

def write_manifest(path: Path, values: Dict[str, object]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(''.join(f"{k} = {v}\n" for k, v in values.items()), encoding='utf-8')


def read_manifest(path: Path) -> Dict[str, str]:
    path = validate_file_exists(Path(path), "checkpoint manifest")
    values: Dict[str, str] = {}
    for line in path.read_text(encoding='utf-8').splitlines():
        if '=' in line:
            key, raw = line.split('=', 1)
            values[key.strip()] = raw.strip()
    return values


def save_checkpoint(agent: BaseAgent, env: BaseEnvironment, cfg: ExperimentConfig, seed_dir: Path, episodes: int) -> None:
    networks = agent.checkpoint()
    if not networks:
        logger.warning(f"{agent.algo}: nothing to checkpoint in {seed_dir}")
        return
    for stem, params in networks.items():
        save_params(seed_dir / f"{stem}.ckpt", params)
    tau_max = cfg.train_config().resolved_tau_max(env.spec.horizon) if cfg.algo == 'tdm' else -1
    write_manifest(seed_dir / MANIFEST_FILE, {
        'env': cfg.env,
        'algo': cfg.algo,
        'config_hash': cfg.config_hash(),
        'episodes': episodes,
        'tau_max': tau_max,
        'goal_features': cfg.goal_features,
        'horizon': env.spec.horizon,
        'hidden_sizes': ', '.join(str(h) for h in cfg.hidden_sizes),
        'networks': ', '.join(sorted(networks)),
    })


def load_tdm_checkpoint(checkpoint_dir: Path, planner: PlannerConfig, seed: int = 0) -> TdmAgent:
    """
    Rebuild a frozen TDM agent from a seed directory.

    Raises:
        ConfigError: If the directory does not hold a TDM checkpoint
    """
    checkpoint_dir = Path(checkpoint_dir)
    manifest = read_manifest(checkpoint_dir / MANIFEST_FILE)
    if manifest.get('algo') != 'tdm':
        raise ConfigError(f"{checkpoint_dir} holds a '{manifest.get('algo')}' checkpoint; eval needs a tdm one")
    options: Dict[str, object] = {'horizon': int(manifest['horizon'])}
    if manifest.get('goal_features', 'default') != 'default':
        options['goal_features'] = manifest['goal_features']
    env = create_registry().make_environment(manifest['env'], **options)
    hidden = [int(h) for h in manifest['hidden_sizes'].split(',') if h.strip()]
    agent = TdmAgent(env, TrainConfig(tau_max=int(manifest['tau_max']), hidden_sizes=hidden, planner=planner), seed)
    agent.critic = agent.critic.with_params(load_params(checkpoint_dir / 'critic.ckpt'))
    agent.actor = agent.actor.with_params(load_params(checkpoint_dir / 'actor.ckpt'))
    logger.info(f"Loaded tdm checkpoint from {checkpoint_dir} (env {env.name}, tau_max {agent.tau_max})")
    return agent


# ============================================================================
# Runs
# ============================================================================

@dataclass
class SeedOutcome:
    seed: int
    metrics_path: Path
    env_steps: int
    failed: bool = False
    numeric_failure: bool = False
    error: Optional[str] = None


@dataclass
class ExperimentOutcome:
    output_dir: Path
    aggregate_path: Path
    seeds: List[SeedOutcome] = field(default_factory=list)

    @property
    def failed_seeds(self) -> List[int]:
        return [s.seed for s in self.seeds if s.failed]

    @property
    def numeric_failure(self) -> bool:
        return any(s.numeric_failure for s in self.seeds)


def run_seed(cfg: ExperimentConfig, seed: int, output_dir: Path, dump_replay: bool = False) -> SeedOutcome:
    """Train one seed, evaluating at every scheduled point, and write its files."""
    registry = create_registry()
    env = registry.make_environment(cfg.env, **cfg.env_options())
    agent = registry.get_learner(cfg.algo)(env, cfg, seed)
    seed_dir = Path(output_dir) / f"seed_{seed}"
    outcome = SeedOutcome(seed=seed, metrics_path=seed_dir / METRICS_FILE, env_steps=0)

    points: List[EvalPoint] = []
    training_rows: List[Dict[str, object]] = []
    rollout = TrainingRollout(env, agent, seed)
    rollout.on_episode_end = lambda ep, result, extra: training_rows.append(
        training_row(ep, rollout.env_steps, result, extra)
    )
    eval_env_steps = 0
    planner_logger = logging.getLogger('tdm_lab.control')
    planner_level = logging.DEBUG if package_level() <= logging.DEBUG else logging.WARNING
    try:
        for target in eval_schedule(cfg.env_step_budget, cfg.eval_cadence):
            while rollout.env_steps < target:
                rollout.step()
            with TemporaryLogLevel(planner_logger, planner_level):
                results = evaluate_agent(agent, env, seed, cfg.eval_episodes)
            eval_env_steps += sum(r.steps for r in results)
            point = EvalPoint.from_results(rollout.env_steps, eval_env_steps, results)
            points.append(point)
            logger.info(
                f"{cfg.algo} seed {seed} @ {point.env_steps} env steps: "
                f"median final distance {point.final_distance:.4f}, reached {point.reached_fraction:.0%}"
            )
    except NumericHealthError as e:
        e.with_context(algo=cfg.algo, seed=seed, env_steps=rollout.env_steps)
        logger.error(f"seed {seed} aborted: {e}")
        outcome.failed, outcome.numeric_failure, outcome.error = True, True, str(e)
    except InvariantViolation as e:
        logger.error(f"seed {seed} aborted at {rollout.env_steps} env steps: {e}")
        outcome.failed, outcome.error = True, str(e)
    except TdmLabError as e:
        logger.error(f"seed {seed} aborted at {rollout.env_steps} env steps: {type(e).__name__}: {e}")
        outcome.failed, outcome.error = True, f"{type(e).__name__}: {e}"
    finally:
        write_frame(seed_frame(points), outcome.metrics_path)
        write_rows(training_rows, TRAINING_COLUMNS, seed_dir / TRAINING_FILE)

    outcome.env_steps = rollout.env_steps
    if cfg.save_checkpoints and not outcome.failed:
        save_checkpoint(agent, env, cfg, seed_dir, rollout.episode)
    if dump_replay and hasattr(agent.buffer, 'dump_csv'):
        agent.buffer.dump_csv(seed_dir / REPLAY_FILE)
    return outcome


def run_experiment(
    cfg: ExperimentConfig,
    output_dir: Optional[Path] = None,
    dump_replay: bool = False,
) -> ExperimentOutcome:
    """
    Run every seed of ``cfg`` and aggregate the per-seed curves.

    Raises:
        ConfigError: Before any compute, if the config is unusable
    """
    check_config(cfg)
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(cfg.to_text(), encoding='utf-8')
    logger.info(f"Running {cfg.algo} on {cfg.env}: seeds {cfg.seeds}, budget {cfg.env_step_budget} -> {out}")

    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(
            max_workers=min(cfg.workers, len(cfg.seeds)),
            initializer=configure_worker_logging,
            initargs=(package_level(),),
        ) as pool:
            futures = [pool.submit(run_seed, cfg, seed, out, dump_replay) for seed in cfg.seeds]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_seed(cfg, seed, out, dump_replay) for seed in cfg.seeds]

    failed = [o.seed for o in outcomes if o.failed]
    if failed:
        logger.warning(f"failed seeds: {failed}")
    aggregate = aggregate_from_files({o.seed: o.metrics_path for o in outcomes}, failed)
    aggregate_path = write_frame(aggregate, out / AGGREGATE_FILE)
    logger.info(f"Aggregate written to {aggregate_path}")
    return ExperimentOutcome(out, aggregate_path, outcomes)


@dataclass
class AblationOutcome:
    output_path: Path
    experiments: Dict[str, ExperimentOutcome]

    @property
    def numeric_failure(self) -> bool:
        return any(e.numeric_failure for e in self.experiments.values())


def run_ablation(cfg: ExperimentConfig, key: str, values: Sequence[str]) -> AblationOutcome:
    """
    One experiment per sweep value with shared seeds, plus a long-format CSV.

    Raises:
        ConfigError: On an unsupported sweep key, an empty value list, or a
            value that does not parse; all checked before any run starts
    """
    if key not in SWEEP_KEYS:
        raise ConfigError(f"sweep key must be one of {SWEEP_KEYS}, got '{key}'")
    values = [str(v).strip() for v in values if str(v).strip()]
    if not values:
        raise ConfigError("sweep value list must not be empty")
    base = Path(cfg.output_dir)
    variants = {}
    for value in values:
        variant = cfg.with_value(key, value)
        check_config(variant)
        variants[value] = variant

    experiments: Dict[str, ExperimentOutcome] = {}
    rows: List[Dict[str, object]] = []
    for value, variant in variants.items():
        outcome = run_experiment(variant, base / f"{key}_{value}")
        experiments[value] = outcome
        frames = {s.seed: pd.read_csv(s.metrics_path) for s in outcome.seeds}
        rows.extend(ablation_rows(value, frames))
    output_path = write_rows(rows, ABLATION_COLUMNS, base / ABLATION_FILE)
    logger.info(f"Ablation over {key} = {values} written to {output_path}")
    return AblationOutcome(output_path, experiments)

