"""
Command-Line Interface for TDM Lab.

Subcommands:
    train           run every seed of a config file and aggregate the curves
    eval            evaluate a saved TDM checkpoint with a chosen policy mode
    ablate          sweep one config key and write a long-format CSV
    oracle-check    compare tabular / neural learners with the exact DP table
    list-components show the registered environments and learners

Exit codes: 0 success, 1 unexpected failure or missed oracle tolerance,
2 configuration error, 3 numeric-health abort.

Educational Notes:
- Command Pattern: each subcommand is an execute_* function returning an exit code
- The CLI only parses arguments and reports; all work happens in the harness
  and oracle packages
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from tdm_lab import __version__
from tdm_lab.control.planners import POLICY_MODES, PlannerConfig
from tdm_lab.core.models import (
    ConfigError,
    NumericHealthError,
    PlanningError,
    TdmLabError,
    Transition,
)
from tdm_lab.envs.tabular import BUILTIN_MDPS, TabularEnvironment, resolve_mdp
from tdm_lab.harness.config import SWEEP_KEYS, ExperimentConfig
from tdm_lab.harness.metrics import episode_frame
from tdm_lab.harness.runner import (
    create_registry,
    evaluate_agent,
    load_tdm_checkpoint,
    run_ablation,
    run_experiment,
)
from tdm_lab.oracle.diagnostics import horizon_uniformity, neural_oracle_check
from tdm_lab.oracle.dp import (
    TdmTable,
    compare_tables,
    dp_solve,
    table_invariant_report,
    tabular_tdm_qlearning,
    tabular_tdm_sweep,
)
from tdm_lab.replay.buffer import RelabelStrategy, ReplayBuffer
from tdm_lab.utils.csv_writer import write_frame
from tdm_lab.utils.logging_config import log_exception_details, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TABULAR_TOLERANCE = 1e-6
NEURAL_TOLERANCE = 0.05
UNIFORMITY_SAMPLES = 100_000


# ============================================================================
# CLI Command Functions
# ============================================================================

def _overrides(pairs: Optional[List[str]], seeds: Optional[List[int]]) -> dict:
    overrides = {}
    for pair in pairs or []:
        if '=' not in pair:
            raise ConfigError(f"--set expects key=value, got '{pair}'")
        key, raw = pair.split('=', 1)
        overrides[key.strip()] = raw.strip()
    if seeds:
        overrides['seeds'] = ','.join(str(s) for s in seeds)
    return overrides


def execute_train(
    config_path: Path,
    seed_override: Optional[List[int]],
    settings: Optional[List[str]],
    output_dir: Optional[Path],
    dump_replay: bool,
) -> int:
    """Run an experiment from a config file."""
    cfg = ExperimentConfig.from_file(config_path, _overrides(settings, seed_override))
    outcome = run_experiment(cfg, output_dir, dump_replay=dump_replay)

    print(f"\nTraining complete: {cfg.algo} on {cfg.env}")
    print(f"  Seeds:     {', '.join(str(s.seed) for s in outcome.seeds)}")
    print(f"  Aggregate: {outcome.aggregate_path}")
    if outcome.failed_seeds:
        print(f"  Failed:    {', '.join(str(s) for s in outcome.failed_seeds)}")
    if outcome.numeric_failure:
        return EXIT_NUMERIC
    return EXIT_FAILURE if outcome.failed_seeds else EXIT_OK


def execute_eval(
    checkpoint_dir: Path,
    policy: str,
    skip_k: int,
    candidates: int,
    episodes: int,
    seed: int,
    output_path: Optional[Path],
) -> int:
    """Evaluate a saved TDM with the given policy-extraction mode."""
    try:
        planner = PlannerConfig(candidates=candidates, skip_k=skip_k, policy=policy)
    except PlanningError as e:
        raise ConfigError(str(e))
    if episodes < 1:
        raise ConfigError(f"--episodes must be >= 1, got {episodes}")

    agent = load_tdm_checkpoint(checkpoint_dir, planner, seed)
    results = evaluate_agent(agent, agent.env, seed, episodes)
    report = episode_frame(results)
    if output_path is not None:
        write_frame(report, output_path)

    finals = report['final_distance'].to_numpy()
    print(f"\nEvaluation of {checkpoint_dir} ({policy}, {episodes} episodes)")
    print("=" * 60)
    print(f"Median final distance: {np.median(finals):.4f}")
    print(f"Mean final distance:   {finals.mean():.4f}")
    print(f"Reached fraction:      {report['reached'].mean():.2f}")
    if output_path is not None:
        print(f"Per-episode report:    {output_path}")
    return EXIT_OK


def execute_ablate(config_path: Path, sweep: str, values: str, output_dir: Optional[Path]) -> int:
    overrides = {'output_dir': str(output_dir)} if output_dir is not None else {}
    cfg = ExperimentConfig.from_file(config_path, overrides)
    outcome = run_ablation(cfg, sweep, values.split(','))
    print(f"\nAblation over {sweep}: {values}")
    print(f"  Long-format CSV: {outcome.output_path}")
    return EXIT_NUMERIC if outcome.numeric_failure else EXIT_OK


def _sampled_horizons(mdp, tau_max: int, seed: int) -> np.ndarray:
    env = TabularEnvironment(mdp, horizon=tau_max + 1)
    buffer = ReplayBuffer.for_env(env, capacity=mdp.n_states * mdp.n_actions)
    actions = env.action_set()
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            nxt = int(mdp.next_state[s, a])
            buffer.store(Transition(env.one_hot(s), actions[a], env.one_hot(nxt), trajectory_id=s * mdp.n_actions + a))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    batch = buffer.sample_relabeled(UNIFORMITY_SAMPLES, RelabelStrategy.UNIFORM_FROM_BUFFER, tau_max, rng)
    return batch.horizons


def execute_oracle_check(
    mdp_name: str,
    tau_max: int,
    mode: str,
    episodes: int,
    epsilon: float,
    gradient_steps: int,
    seed: int,
) -> int:
    """
    Compare a learner with dp_solve and print a report table.

    Returns:
        0 when every check passes, 1 when a tolerance is missed
    """
    if tau_max < 0:
        raise ConfigError(f"--tau-max must be >= 0, got {tau_max}")
    mdp = resolve_mdp(mdp_name)
    exact = dp_solve(mdp, tau_max)

    if mode == 'dp':
        report = table_invariant_report(exact, mdp)
        swept = TdmTable.zeros(mdp, tau_max)
        tabular_tdm_sweep(swept, mdp)
        max_abs, mismatches = compare_tables(swept, exact)
        uniformity = horizon_uniformity(_sampled_horizons(mdp, tau_max, seed), tau_max)
        extra = pd.DataFrame([
            {'check': 'ordered_sweep_matches', 'worst_violation': max_abs,
             'passed': max_abs < TABULAR_TOLERANCE and mismatches == 0},
            {'check': 'horizon_uniformity', 'worst_violation': uniformity['statistic'],
             'passed': uniformity['uniform']},
        ])
        report = pd.concat([report, extra], ignore_index=True)
    elif mode == 'tabular':
        rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
        learned = tabular_tdm_qlearning(mdp, tau_max, episodes, alpha=1.0, epsilon=epsilon, rng=rng)
        max_abs, mismatches = compare_tables(learned, exact)
        report = pd.DataFrame([
            {'check': 'max_abs_error', 'worst_violation': max_abs, 'passed': max_abs < TABULAR_TOLERANCE},
            {'check': 'argmax_mismatches', 'worst_violation': float(mismatches), 'passed': mismatches == 0},
        ])
    else:
        result = neural_oracle_check(mdp, tau_max, gradient_steps=gradient_steps, seed=seed)
        report = pd.DataFrame([
            {'check': 'max_abs_error', 'worst_violation': result.max_abs, 'passed': result.max_abs < NEURAL_TOLERANCE},
            {'check': 'argmax_mismatches', 'worst_violation': float(result.argmax_mismatches), 'passed': True},
        ])

    print(f"\nOracle check: {mdp.name} (S={mdp.n_states}, A={mdp.n_actions}), tau_max={tau_max}, mode={mode}")
    print("=" * 60)
    print(report.to_string(index=False))
    passed = bool(report['passed'].all())
    print(f"\nResult: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAILURE


def execute_list_components() -> int:
    registry = create_registry()
    print("Registered Environments:")
    print("=" * 60)
    for name in registry.list_environments():
        marker = ' (tabular)' if name in BUILTIN_MDPS else ''
        print(f"  - {name}{marker}")
    print("\nRegistered Learners:")
    print("=" * 60)
    for algo in registry.list_learners():
        print(f"  - {algo}")
    return EXIT_OK


# ============================================================================
# Argument Parser Setup
# ============================================================================

def create_argument_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tdm-lab',
        description='''TDM Lab - Temporal Difference Models at desk scale

Train goal- and horizon-conditioned value functions, compare them with
model-free and model-based baselines, and check them against exact
dynamic-programming solutions on small tabular MDPs.''',
        epilog='''Examples:
  # Train from a config file, overriding the seeds
  python -m tdm_lab train --config configs/pointmass_tdm.cfg --seed-override 0 1 2

  # Evaluate a checkpoint with explicit MPC
  python -m tdm_lab eval --checkpoint runs/pointmass/seed_0 --policy mpc --episodes 20

  # Scalar vs vectorized supervision
  python -m tdm_lab ablate --config configs/pointmass_tdm.cfg --sweep supervision_mode --values scalar,vectorized

  # Tabular learner against the exact table
  python -m tdm_lab oracle-check --mdp gridchain5 --tau-max 8 --mode tabular''',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable DEBUG logging with the detailed format')
    parser.add_argument('--log-file', type=Path, metavar='FILE', help='Also write the log to FILE')
    parser.add_argument('--version', action='version', version=f'TDM Lab v{__version__}')

    subparsers = parser.add_subparsers(dest='command', help='Available commands', required=False)

    train_parser = subparsers.add_parser(
        'train',
        help='Run every seed of an experiment config',
        description='''Run an experiment

Trains one learner per seed, evaluates it every eval_cadence env steps with
noise-free episodes, and writes seed_<k>/metrics.csv plus aggregate.csv.''',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    train_parser.add_argument('--config', type=Path, required=True, metavar='FILE', help='key = value config file')
    train_parser.add_argument('--seed-override', type=int, nargs='+', metavar='SEED', help='Replace the seed list')
    train_parser.add_argument('--set', action='append', metavar='KEY=VALUE', help='Override one config key (repeatable)')
    train_parser.add_argument('--output-dir', type=Path, metavar='DIR', help='Override output_dir')
    train_parser.add_argument('--dump-replay', action='store_true', help='Write each seed\'s replay buffer to replay.csv')

    eval_parser = subparsers.add_parser('eval', help='Evaluate a saved TDM checkpoint')
    eval_parser.add_argument('--checkpoint', type=Path, required=True, metavar='DIR', help='Seed directory with manifest.txt')
    eval_parser.add_argument('--policy', choices=POLICY_MODES, default='direct', help='Policy extraction (default: direct)')
    eval_parser.add_argument('--K', dest='skip_k', type=int, default=1, help='Planning skip for skipK (default: 1)')
    eval_parser.add_argument('--candidates', type=int, default=1024, help='Planner candidates (default: 1024)')
    eval_parser.add_argument('--episodes', type=int, default=10, help='Evaluation episodes (default: 10)')
    eval_parser.add_argument('--seed', type=int, default=0, help='Evaluation seed (default: 0)')
    eval_parser.add_argument('--output', '-o', type=Path, metavar='CSV', help='Write the per-episode report')

    ablate_parser = subparsers.add_parser('ablate', help='Sweep one config key')
    ablate_parser.add_argument('--config', type=Path, required=True, metavar='FILE')
    ablate_parser.add_argument('--sweep', required=True, choices=SWEEP_KEYS)
    ablate_parser.add_argument('--values', required=True, help='Comma-separated sweep values')
    ablate_parser.add_argument('--output-dir', type=Path, metavar='DIR', help='Override output_dir')

    oracle_parser = subparsers.add_parser('oracle-check', help='Compare learners with the exact DP table')
    oracle_parser.add_argument('--mdp', required=True, help=f"Built-in MDP ({', '.join(BUILTIN_MDPS)}) or .mdp file")
    oracle_parser.add_argument('--tau-max', type=int, required=True)
    oracle_parser.add_argument('--mode', choices=('dp', 'tabular', 'neural'), default='dp')
    oracle_parser.add_argument('--episodes', type=int, default=2000, help='Tabular learner episodes')
    oracle_parser.add_argument('--epsilon', type=float, default=0.3, help='Tabular exploration rate')
    oracle_parser.add_argument('--gradient-steps', type=int, default=200_000, help='Neural check gradient steps')
    oracle_parser.add_argument('--seed', type=int, default=0)

    subparsers.add_parser('list-components', help='List registered environments and learners')
    return parser


# ============================================================================
# Main Entry Point
# ============================================================================

def dispatch(args: argparse.Namespace) -> int:
    if args.command == 'train':
        return execute_train(args.config, args.seed_override, args.set, args.output_dir, args.dump_replay)
    if args.command == 'eval':
        return execute_eval(
            args.checkpoint, args.policy, args.skip_k, args.candidates, args.episodes, args.seed, args.output
        )
    if args.command == 'ablate':
        return execute_ablate(args.config, args.sweep, args.values, args.output_dir)
    if args.command == 'oracle-check':
        return execute_oracle_check(
            args.mdp, args.tau_max, args.mode, args.episodes, args.epsilon, args.gradient_steps, args.seed
        )
    if args.command == 'list-components':
        return execute_list_components()
    raise ConfigError(f"unknown command '{args.command}'")


def main(argv: Optional[list] = None) -> int:
    """
    Main entry point for the CLI.

    Args:
        argv: Command-line arguments (None = use sys.argv)

    Returns:
        Exit code
    """
    parser = create_argument_parser()
    args = parser.parse_args(argv)
    setup_logging(
        level=logging.DEBUG if args.verbose else logging.INFO,
        log_file=args.log_file,
        verbose=args.verbose,
    )
    logger.debug(f"Parsed arguments: {args}")

    if not args.command:
        parser.print_help()
        return EXIT_OK

    try:
        return dispatch(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericHealthError as e:
        logger.error(f"Numeric health abort: {e}")
        return EXIT_NUMERIC
    except TdmLabError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_FAILURE
    except Exception as e:
        log_exception_details(logger, e)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
