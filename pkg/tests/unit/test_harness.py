"""
Unit tests for experiment configuration, metrics and orchestration.

Educational Notes:
- Runs here use gridchain5 with tiny networks, so a whole experiment
  finishes in well under a second
- Failure handling is exercised by patching the agent with unittest.mock
"""

import shutil
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd

from tdm_lab.control.planners import PlannerConfig
from tdm_lab.core.models import ConfigError, EpisodeResult, InvariantViolation, NumericHealthError, ReplayError
from tdm_lab.harness.config import ExperimentConfig
from tdm_lab.harness.metrics import (
    ABLATION_COLUMNS,
    SEED_COLUMNS,
    EvalPoint,
    ablation_rows,
    aggregate_seed_frames,
    episode_frame,
    seed_frame,
    steps_to_threshold,
)
from tdm_lab.harness.runner import (
    MANIFEST_FILE,
    check_config,
    create_registry,
    eval_schedule,
    evaluate_agent,
    load_tdm_checkpoint,
    read_manifest,
    run_ablation,
    run_experiment,
    run_seed,
)
from tdm_lab.replay.buffer import RelabelStrategy
from tdm_lab.tdm.losses import SupervisionMode
from tdm_lab.tdm.trainer import TdmAgent

TINY = """
env = gridchain5
algo = tdm
seeds = 0
env_step_budget = 20
eval_cadence = 10
eval_episodes = 2
batch_size = 8
updates_per_step = 1
hidden_sizes = 8
"""


def tiny_config(output_dir: str, **overrides) -> ExperimentConfig:
    raw = {'output_dir': output_dir}
    raw.update({k: str(v) for k, v in overrides.items()})
    return ExperimentConfig.parse(TINY, raw)


def curve(steps, distances) -> pd.DataFrame:
    return pd.DataFrame({'env_steps': steps, 'final_distance': distances})


# ============================================================================
# Configuration
# ============================================================================

class TestExperimentConfig(unittest.TestCase):
    """Test parsing, validation and derived configs."""

    def test_parse_coerces_field_types(self):
        """Test ints, floats, bools and int lists from text."""
        # Act
        cfg = ExperimentConfig.parse(
            "seeds = 3, 4\npolyak = 0.99\nsave_checkpoints = no\ntau_max = 7  # comment\n"
        )

        # Assert
        self.assertEqual(cfg.seeds, [3, 4])
        self.assertEqual(cfg.polyak, 0.99)
        self.assertFalse(cfg.save_checkpoints)
        self.assertEqual(cfg.tau_max, 7)

    def test_unknown_key_rejected(self):
        """Test typos are errors rather than silent defaults."""
        # Act & Assert
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.parse("tau_maxx = 3\n")
        self.assertIn('tau_maxx', str(ctx.exception))

    def test_duplicate_key_rejected(self):
        """Test a key may appear once."""
        # Act & Assert
        with self.assertRaises(ConfigError):
            ExperimentConfig.parse("algo = tdm\nalgo = ddpg\n")

    def test_bad_values_rejected(self):
        """Test malformed lines, values and invalid settings."""
        # Act & Assert
        for text in ("batch_size = many\n", "just words\n", "seeds = \n",
                     "algo = ppo\n", "supervision_mode = both\n", "policy = cem\n"):
            with self.assertRaises(ConfigError, msg=text):
                ExperimentConfig.parse(text)

    def test_overrides_apply_after_file(self):
        """Test override pairs win over file values."""
        # Act
        cfg = ExperimentConfig.parse("tau_max = 3\n", {'tau_max': '9'})

        # Assert
        self.assertEqual(cfg.tau_max, 9)

    def test_to_text_is_canonical(self):
        """Test to_text parses back to an equal config with an equal hash."""
        # Arrange
        cfg = ExperimentConfig.parse("env = reacher2\nseeds = 1, 2\nsave_checkpoints = false\n")

        # Act
        again = ExperimentConfig.parse(cfg.to_text())

        # Assert
        self.assertEqual(again, cfg)
        self.assertEqual(again.config_hash(), cfg.config_hash())
        self.assertNotEqual(cfg.with_value('tau_max', '5').config_hash(), cfg.config_hash())

    def test_sentinels_map_to_defaults(self):
        """Test -1 / 0 sentinels become None in the training config."""
        # Act
        train = ExperimentConfig().train_config()

        # Assert
        self.assertIsNone(train.tau_max)
        self.assertIsNone(train.min_replay)
        self.assertIsNone(train.future_window)
        self.assertIs(train.supervision, SupervisionMode.VECTORIZED)
        self.assertIs(train.relabel, RelabelStrategy.FUTURE_ON_TRAJECTORY)

    def test_env_options_only_carry_overrides(self):
        """Test default horizon and goal features are not forwarded."""
        # Assert
        self.assertEqual(ExperimentConfig().env_options(), {})
        self.assertEqual(
            ExperimentConfig(horizon=20, goal_features='tip').env_options(),
            {'horizon': 20, 'goal_features': 'tip'},
        )

    def test_missing_config_file(self):
        """Test a missing path is a ConfigError."""
        # Act & Assert
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_file('/nonexistent/run.cfg')

    def test_check_config_validates_environment(self):
        """Test unknown environments and bad options fail before compute."""
        # Act & Assert
        with self.assertRaises(ConfigError):
            check_config(ExperimentConfig(env='pointmas'))
        with self.assertRaises(ConfigError):
            check_config(ExperimentConfig(env='reacher2', goal_features='position'))
        with self.assertRaises(ConfigError):
            check_config(ExperimentConfig(candidates=0))

    def test_check_config_rejects_unusable_learner_settings(self):
        """Test learning rates, polyak and capacity are range-checked upfront."""
        # Act & Assert
        for overrides in ({'critic_lr': 0.0}, {'actor_lr': -1e-4}, {'model_lr': 0.0}, {'polyak': 1.5},
                          {'polyak': 0.0}, {'replay_capacity': 0}, {'batch_size': 0}, {'gamma': 1.2}):
            with self.assertRaises(ConfigError, msg=str(overrides)):
                check_config(ExperimentConfig(**overrides))

    def test_run_experiment_with_bad_config_writes_nothing(self):
        """Test a config that cannot train leaves no seed directories behind."""
        # Arrange
        temp_dir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, temp_dir, True)
        cfg = ExperimentConfig.parse(TINY, {'output_dir': temp_dir})
        cfg.critic_lr = 0.0

        # Act & Assert
        with self.assertRaises(ConfigError):
            run_experiment(cfg, Path(temp_dir) / 'bad')
        self.assertFalse((Path(temp_dir) / 'bad').exists())


# ============================================================================
# Metrics
# ============================================================================

class TestMetrics(unittest.TestCase):
    """Test curve records and aggregation."""

    def test_eval_point_uses_median(self):
        """Test final_distance is the median, with the mean kept separately."""
        # Arrange
        results = [EpisodeResult(d, d < 0.1, None, 5) for d in (0.0, 0.2, 1.0)]

        # Act
        point = EvalPoint.from_results(100, 15, results)

        # Assert
        self.assertEqual(point.final_distance, 0.2)
        self.assertAlmostEqual(point.mean_final_distance, 0.4)
        self.assertAlmostEqual(point.reached_fraction, 1 / 3)
        self.assertEqual(list(seed_frame([point]).columns), SEED_COLUMNS)

    def test_episode_frame_marks_unreached(self):
        """Test steps_to_reach is -1 for episodes that never reached the goal."""
        # Act
        frame = episode_frame([EpisodeResult(0.5, False, None, 5), EpisodeResult(0.0, True, 3, 5)])

        # Assert
        self.assertEqual(list(frame['steps_to_reach']), [-1, 3])

    def test_aggregate_statistics(self):
        """Test median, mean and population std across seeds."""
        # Arrange
        frames = {0: curve([10, 20], [1.0, 0.5]), 1: curve([10, 20], [3.0, 0.5]), 2: curve([10, 20], [2.0, 0.2])}

        # Act
        agg = aggregate_seed_frames(frames)

        # Assert
        self.assertEqual(list(agg.columns),
                         ['env_steps', 'seed_0', 'seed_1', 'seed_2', 'median', 'mean', 'std', 'failed_seeds'])
        np.testing.assert_allclose(agg['median'], [2.0, 0.5])
        np.testing.assert_allclose(agg['mean'], [2.0, 0.4])
        np.testing.assert_allclose(agg['std'], [np.std([1.0, 3.0, 2.0]), np.std([0.5, 0.5, 0.2])])

    def test_aggregate_with_truncated_failed_seed(self):
        """Test a failed seed contributes only the points it reached."""
        # Arrange
        frames = {0: curve([10, 20], [1.0, 0.4]), 1: curve([10], [3.0])}

        # Act
        agg = aggregate_seed_frames(frames, failed_seeds=[1])

        # Assert
        np.testing.assert_allclose(agg['median'], [2.0, 0.4])
        self.assertTrue(np.isnan(agg.loc[1, 'seed_1']))
        self.assertEqual(set(agg['failed_seeds']), {'1'})

    def test_empty_curves_give_header_only(self):
        """Test a zero budget aggregates to an empty frame with columns."""
        # Act
        agg = aggregate_seed_frames({0: pd.DataFrame(columns=SEED_COLUMNS)})

        # Assert
        self.assertTrue(agg.empty)
        self.assertIn('median', agg.columns)

    def test_steps_to_threshold(self):
        """Test the first env_steps strictly below the threshold."""
        # Arrange
        frame = pd.DataFrame({'env_steps': [10, 20, 30], 'median': [0.5, 0.1, 0.05]})

        # Assert
        self.assertEqual(steps_to_threshold(frame), 30)
        self.assertIsNone(steps_to_threshold(frame, threshold=0.01))
        self.assertIsNone(steps_to_threshold(frame.iloc[0:0]))

    def test_ablation_rows_are_long_format(self):
        """Test one row per (seed, eval point)."""
        # Act
        rows = ablation_rows('scalar', {0: curve([10, 20], [1.0, 0.5]), 1: curve([10], [2.0])})

        # Assert
        self.assertEqual(len(rows), 3)
        self.assertEqual(set(rows[0]), set(ABLATION_COLUMNS))
        self.assertEqual(rows[2], {'sweep_value': 'scalar', 'seed': 1, 'env_steps': 10, 'final_distance': 2.0})


# ============================================================================
# Orchestration
# ============================================================================

class TestRunner(unittest.TestCase):
    """Test schedules, seeds, checkpoints and failure handling."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_eval_schedule(self):
        """Test multiples of the cadence plus the budget, and the cadence-0 and budget-0 cases."""
        # Assert
        self.assertEqual(eval_schedule(25, 10), [10, 20, 25])
        self.assertEqual(eval_schedule(2500, 1000), [1000, 2000, 2500])
        self.assertEqual(eval_schedule(30, 10), [10, 20, 30])
        self.assertEqual(eval_schedule(30, 0), [30])
        self.assertEqual(eval_schedule(0, 10), [])

    def test_evaluation_uses_fixed_episode_seeds(self):
        """Test repeated evaluations of a frozen agent agree exactly."""
        # Arrange
        cfg = tiny_config(self.temp_dir)
        env = create_registry().make_environment('gridchain5')
        agent = TdmAgent(env, cfg.train_config(), seed=0)

        # Act
        first = evaluate_agent(agent, env, 0, 3)
        second = evaluate_agent(agent, env, 0, 3)

        # Assert
        self.assertEqual([r.distances for r in first], [r.distances for r in second])

    def test_run_seed_writes_curves_and_checkpoint(self):
        """Test per-seed files, env-step accounting and the manifest."""
        # Arrange
        cfg = tiny_config(self.temp_dir)

        # Act
        outcome = run_seed(cfg, 0, Path(self.temp_dir))
        metrics = pd.read_csv(outcome.metrics_path)
        manifest = read_manifest(Path(self.temp_dir) / 'seed_0' / MANIFEST_FILE)

        # Assert
        self.assertFalse(outcome.failed)
        self.assertEqual(outcome.env_steps, 20)
        self.assertEqual(list(metrics['env_steps']), [10, 20])
        self.assertEqual(list(metrics['eval_env_steps']), [10, 20])
        self.assertEqual(manifest['algo'], 'tdm')
        self.assertEqual(manifest['tau_max'], '4')
        self.assertEqual(manifest['config_hash'], cfg.config_hash())
        self.assertTrue((Path(self.temp_dir) / 'seed_0' / 'training.csv').exists())

    def test_budget_off_the_cadence_is_still_evaluated(self):
        """Test a budget that is not a multiple of the cadence is trained and evaluated in full."""
        # Arrange
        cfg = tiny_config(self.temp_dir, env_step_budget=25, save_checkpoints='false')

        # Act
        outcome = run_seed(cfg, 0, Path(self.temp_dir))
        metrics = pd.read_csv(outcome.metrics_path)

        # Assert
        self.assertFalse(outcome.failed)
        self.assertEqual(outcome.env_steps, 25)
        self.assertEqual(list(metrics['env_steps']), [10, 20, 25])

    def test_checkpoint_reload_reproduces_greedy_actions(self):
        """Test a reloaded agent acts exactly like the trained one."""
        # Arrange
        cfg = tiny_config(self.temp_dir, env='pointmass', horizon=5, eval_cadence=0)
        run_seed(cfg, 0, Path(self.temp_dir))
        seed_dir = Path(self.temp_dir) / 'seed_0'

        # Act
        agent = load_tdm_checkpoint(seed_dir, PlannerConfig())
        again = load_tdm_checkpoint(seed_dir, PlannerConfig())
        state, goal = agent.env.reset(3)

        # Assert
        self.assertEqual(agent.env.spec.horizon, 5)
        np.testing.assert_array_equal(
            agent.act(state, goal, 5, explore=False), again.act(state, goal, 5, explore=False)
        )

    def test_invariant_violation_marks_seed_failed(self):
        """Test a failed q <= 0 check flushes partial curves and skips the checkpoint."""
        # Arrange
        cfg = tiny_config(self.temp_dir)
        with mock.patch.object(TdmAgent, 'probe_non_positive', side_effect=InvariantViolation("q = 1 > 0")):
            # Act
            outcome = run_seed(cfg, 0, Path(self.temp_dir))

        # Assert
        self.assertTrue(outcome.failed)
        self.assertFalse(outcome.numeric_failure)
        self.assertTrue(outcome.metrics_path.exists())
        self.assertFalse((Path(self.temp_dir) / 'seed_0' / MANIFEST_FILE).exists())

    def test_numeric_failure_is_reported(self):
        """Test a NaN during training marks a numeric failure with context."""
        # Arrange
        cfg = tiny_config(self.temp_dir)
        error = NumericHealthError("non-finite critic loss", {'batch_index': 3})
        with mock.patch.object(TdmAgent, 'update_once', side_effect=error):
            # Act
            outcome = run_seed(cfg, 0, Path(self.temp_dir))

        # Assert
        self.assertTrue(outcome.numeric_failure)
        self.assertIn('batch_index=3', outcome.error)
        self.assertIn('seed=0', outcome.error)

    def test_other_lab_errors_mark_seed_failed(self):
        """Test a replay error mid-run fails the seed instead of the experiment."""
        # Arrange
        cfg = tiny_config(self.temp_dir)
        with mock.patch.object(TdmAgent, 'update_once', side_effect=ReplayError("batch size must be >= 1, got 0")):
            # Act
            outcome = run_seed(cfg, 0, Path(self.temp_dir))

        # Assert
        self.assertTrue(outcome.failed)
        self.assertFalse(outcome.numeric_failure)
        self.assertIn('ReplayError', outcome.error)
        self.assertTrue(outcome.metrics_path.exists())
        self.assertFalse((Path(self.temp_dir) / 'seed_0' / MANIFEST_FILE).exists())

    def test_experiment_is_reproducible(self):
        """Test two runs of one config write identical aggregates."""
        # Arrange
        cfg = tiny_config(self.temp_dir, seeds='0, 1', save_checkpoints='false')

        # Act
        first = run_experiment(cfg, Path(self.temp_dir) / 'a')
        second = run_experiment(cfg, Path(self.temp_dir) / 'b')

        # Assert
        self.assertEqual(first.aggregate_path.read_bytes(), second.aggregate_path.read_bytes())
        self.assertEqual((Path(self.temp_dir) / 'a' / 'config.txt').read_text(), cfg.to_text())
        self.assertEqual(first.failed_seeds, [])

    def test_zero_budget_writes_header_only_curves(self):
        """Test a zero budget still writes every file, without rows."""
        # Arrange
        cfg = tiny_config(self.temp_dir, env_step_budget=0, save_checkpoints='false')

        # Act
        outcome = run_experiment(cfg, Path(self.temp_dir) / 'zero')
        aggregate = pd.read_csv(outcome.aggregate_path)

        # Assert
        self.assertTrue(aggregate.empty)
        self.assertIn('median', aggregate.columns)

    def test_ablation_writes_long_csv(self):
        """Test one sub-experiment per value and a combined CSV."""
        # Arrange
        cfg = tiny_config(self.temp_dir, save_checkpoints='false', eval_cadence=0)

        # Act
        outcome = run_ablation(cfg, 'supervision_mode', ['scalar', 'vectorized'])
        frame = pd.read_csv(outcome.output_path)

        # Assert
        self.assertEqual(sorted(outcome.experiments), ['scalar', 'vectorized'])
        self.assertEqual(list(frame.columns), ABLATION_COLUMNS)
        self.assertEqual(sorted(frame['sweep_value']), ['scalar', 'vectorized'])
        self.assertTrue((Path(self.temp_dir) / 'supervision_mode_scalar' / 'aggregate.csv').exists())

    def test_ablation_validates_before_running(self):
        """Test bad sweep keys and values fail before any output is written."""
        # Arrange
        cfg = tiny_config(self.temp_dir)

        # Act & Assert
        with self.assertRaises(ConfigError):
            run_ablation(cfg, 'critic_lr', ['1e-3'])
        with self.assertRaises(ConfigError):
            run_ablation(cfg, 'tau_max', ['3', 'lots'])
        with self.assertRaises(ConfigError):
            run_ablation(cfg, 'tau_max', [])
        self.assertFalse((Path(self.temp_dir) / 'tau_max_3').exists())


if __name__ == '__main__':
    unittest.main()
