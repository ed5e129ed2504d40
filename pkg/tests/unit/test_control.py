"""
Unit tests for task rewards and the planners.

Educational Notes:
- Planners only need predict() and act(), so closed-form stand-ins make
  the winning candidate computable by hand
"""

import unittest

import numpy as np

from tdm_lab.control.planners import (
    PlannerConfig,
    direct_policy,
    explicit_mpc,
    plan_candidates,
    skip_k_plan,
)
from tdm_lab.control.task import TaskReward
from tdm_lab.core.interfaces import GoalConditionedActor, GoalConditionedPredictor
from tdm_lab.core.models import ConfigError, PlanningError


# ============================================================================
# Stand-ins
# ============================================================================

class GoalEchoActor(GoalConditionedActor):
    """Acts with the first two goal components; records the horizons it saw."""

    def __init__(self):
        self.horizons = []

    def act(self, states, goals, horizons):
        self.horizons.extend(int(t) for t in np.asarray(horizons).reshape(-1))
        return np.asarray(goals, dtype=float)[:, :2].copy()


class HalfwayPredictor(GoalConditionedPredictor):
    """Predicts ending halfway between the state's first components and the goal."""

    def predict(self, states, actions, goals, horizons):
        states = np.asarray(states, dtype=float)
        goals = np.asarray(goals, dtype=float)
        return 0.5 * (states[:, :goals.shape[1]] + goals)


class ConstantPredictor(GoalConditionedPredictor):
    def predict(self, states, actions, goals, horizons):
        return np.zeros_like(np.asarray(goals, dtype=float))


def box_task(targets, fixed):
    return TaskReward.feature_target(np.asarray(targets, dtype=float), fixed, -np.ones(3), np.ones(3))


# ============================================================================
# Task Reward Tests
# ============================================================================

class TestTaskReward(unittest.TestCase):
    """Test terminal task rewards in goal space."""

    def test_evaluate_reads_only_fixed_components(self):
        """Test r_c is minus the l1 distance on the pinned components."""
        # Arrange
        task = box_task([0.5, 0.0, -0.5], fixed=(0, 2))

        # Act
        scores = task.evaluate(np.array([[0.5, 9.0, -0.5], [0.0, 0.0, 0.0]]))

        # Assert
        np.testing.assert_allclose(scores, [0.0, -1.0])
        self.assertEqual(task.free_indices, (1,))

    def test_candidates_pin_fixed_and_sample_free_in_box(self):
        """Test fixed components equal the targets and free ones stay in the box."""
        # Arrange
        task = box_task([0.3, 0.0, 0.7], fixed=(0, 2))

        # Act
        candidates = task.sample_candidates(200, np.random.default_rng(0))

        # Assert
        np.testing.assert_array_equal(candidates[:, 0], 0.3)
        np.testing.assert_array_equal(candidates[:, 2], 0.7)
        self.assertTrue(np.all(np.abs(candidates[:, 1]) <= 1.0))
        self.assertGreater(np.ptp(candidates[:, 1]), 1.0)

    def test_smaller_candidate_sets_are_prefixes(self):
        """Test the first k candidates do not depend on the total count."""
        # Arrange
        task = box_task([0.0, 0.0, 0.0], fixed=(0,))

        # Act
        small = task.sample_candidates(8, np.random.default_rng(4))
        large = task.sample_candidates(64, np.random.default_rng(4))

        # Assert
        np.testing.assert_array_equal(small, large[:8])

    def test_fully_pinned_task_has_one_candidate(self):
        """Test goal reaching yields exactly the goal as the only candidate."""
        # Arrange
        task = TaskReward.goal_reaching(np.array([0.1, 0.2, 0.3]), -np.ones(3), np.ones(3))

        # Act
        candidates = task.sample_candidates(50, np.random.default_rng(0))

        # Assert
        np.testing.assert_array_equal(candidates, [[0.1, 0.2, 0.3]])

    def test_invalid_fixed_indices_rejected(self):
        """Test duplicate or out-of-range indices raise ConfigError."""
        # Act & Assert
        with self.assertRaises(ConfigError):
            box_task([0.0, 0.0, 0.0], fixed=(1, 1))
        with self.assertRaises(ConfigError):
            box_task([0.0, 0.0, 0.0], fixed=(3,))


# ============================================================================
# Planner Tests
# ============================================================================

class TestPlanners(unittest.TestCase):
    """Test candidate scoring, horizons and error handling."""

    def setUp(self):
        self.actor = GoalEchoActor()
        self.predictor = HalfwayPredictor()
        self.state = np.array([0.2, -0.4, 0.0])

    def test_direct_policy_is_the_actor(self):
        """Test direct extraction returns pi(s, g, tau)."""
        # Act
        action = direct_policy(self.actor, self.state, np.array([0.5, 0.6, 0.7]), 4)

        # Assert
        np.testing.assert_array_equal(action, [0.5, 0.6])
        self.assertEqual(self.actor.horizons, [4])

    def test_direct_policy_rejects_negative_tau(self):
        """Test tau < 0 raises PlanningError."""
        # Act & Assert
        with self.assertRaises(PlanningError):
            direct_policy(self.actor, self.state, np.zeros(3), -1)

    def test_best_candidate_has_highest_score(self):
        """Test the chosen candidate maximizes r_c of the predicted outcome."""
        # Arrange
        task = box_task([0.6, 0.0, 0.0], fixed=(0,))

        # Act
        result = plan_candidates(self.predictor, self.actor, self.state, task, 3, 256, np.random.default_rng(1))

        # Assert
        goals = task.sample_candidates(256, np.random.default_rng(1))
        scores = task.evaluate(self.predictor.predict(np.tile(self.state, (256, 1)), None, goals, None))
        self.assertEqual(result.candidate_index, int(np.argmax(scores)))
        self.assertAlmostEqual(result.score, float(scores.max()))
        np.testing.assert_array_equal(result.action, result.goal[:2])

    def test_ties_pick_lowest_index(self):
        """Test equal scores select candidate 0."""
        # Arrange
        task = box_task([0.6, 0.0, 0.0], fixed=(0,))

        # Act
        result = plan_candidates(ConstantPredictor(), self.actor, self.state, task, 0, 32, np.random.default_rng(2))

        # Assert
        self.assertEqual(result.candidate_index, 0)

    def test_more_candidates_never_score_worse(self):
        """Test a larger candidate budget searches a superset under one seed."""
        # Arrange
        task = box_task([0.6, 0.0, 0.0], fixed=(0,))

        # Act
        small = plan_candidates(self.predictor, self.actor, self.state, task, 1, 16, np.random.default_rng(3))
        large = plan_candidates(self.predictor, self.actor, self.state, task, 1, 512, np.random.default_rng(3))

        # Assert
        self.assertGreaterEqual(large.score, small.score)

    def test_mpc_uses_remaining_minus_one(self):
        """Test explicit MPC queries horizon T_remaining - 1."""
        # Arrange
        task = box_task([0.6, 0.0, 0.0], fixed=(0,))
        cfg = PlannerConfig(candidates=4, policy='mpc')

        # Act
        explicit_mpc(self.predictor, self.actor, self.state, task, 7, cfg, np.random.default_rng(0))

        # Assert
        self.assertEqual(set(self.actor.horizons), {6})

    def test_skip_k_uses_k_minus_one(self):
        """Test skip planning queries horizon K - 1 for the first waypoint."""
        # Arrange
        task = box_task([0.6, 0.0, 0.0], fixed=(0,))
        cfg = PlannerConfig(candidates=4, skip_k=3, policy='skipK')

        # Act
        skip_k_plan(self.predictor, self.actor, self.state, task, 10, 3, cfg, np.random.default_rng(0))

        # Assert
        self.assertEqual(set(self.actor.horizons), {2})

    def test_invalid_horizons_raise(self):
        """Test remaining < 1 and K outside [1, remaining] raise PlanningError."""
        # Arrange
        task = box_task([0.0, 0.0, 0.0], fixed=(0,))
        cfg = PlannerConfig(candidates=4)
        rng = np.random.default_rng(0)

        # Act & Assert
        with self.assertRaises(PlanningError):
            explicit_mpc(self.predictor, self.actor, self.state, task, 0, cfg, rng)
        with self.assertRaises(PlanningError):
            skip_k_plan(self.predictor, self.actor, self.state, task, 5, 6, cfg, rng)
        with self.assertRaises(PlanningError):
            skip_k_plan(self.predictor, self.actor, self.state, task, 5, 0, cfg, rng)

    def test_skip_k_over_the_whole_remainder_is_mpc(self):
        """Test K = T_remaining gives the explicit MPC action under one rng stream."""
        # Arrange
        task = box_task([0.6, 0.0, -0.3], fixed=(0, 2))
        cfg = PlannerConfig(candidates=64, skip_k=5, policy='skipK')

        # Act
        mpc = explicit_mpc(self.predictor, self.actor, self.state, task, 5, cfg, np.random.default_rng(9))
        skip = skip_k_plan(self.predictor, self.actor, self.state, task, 5, 5, cfg, np.random.default_rng(9))

        # Assert
        np.testing.assert_array_equal(skip, mpc)
        self.assertEqual(set(self.actor.horizons), {4})

    def test_fully_pinned_mpc_is_the_direct_policy(self):
        """Test a fully specified goal reduces MPC to pi(s, s_g, T_remaining - 1)."""
        # Arrange
        goal = np.array([0.5, -0.1, 0.2])
        task = TaskReward.goal_reaching(goal, -np.ones(3), np.ones(3))
        cfg = PlannerConfig(candidates=32, policy='mpc')

        # Act
        planned = explicit_mpc(self.predictor, self.actor, self.state, task, 6, cfg, np.random.default_rng(0))
        direct = direct_policy(GoalEchoActor(), self.state, goal, 5)

        # Assert
        np.testing.assert_array_equal(planned, direct)
        self.assertEqual(self.actor.horizons, [5])

    def test_planner_config_validation(self):
        """Test candidate counts and policy names are validated."""
        # Act & Assert
        with self.assertRaises(PlanningError):
            PlannerConfig(candidates=0)
        with self.assertRaises(PlanningError):
            PlannerConfig(policy='cem')


if __name__ == '__main__':
    unittest.main()
