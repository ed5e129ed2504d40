"""
Unit tests for the replay buffer and goal relabeling.

Educational Notes:
- States in these tests encode (trajectory, step) directly, so a relabeled
  goal can be traced back to the exact transition that supplied it
- Horizon uniformity is checked with a chi-square test from scipy
"""

import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from tdm_lab.core.models import ConfigError, NumericHealthError, ReplayError, ShapeError, Transition
from tdm_lab.replay.buffer import RelabelStrategy, ReplayBuffer


def identity(states: np.ndarray) -> np.ndarray:
    return np.asarray(states, dtype=float)


def make_buffer(capacity: int = 1000) -> ReplayBuffer:
    return ReplayBuffer(capacity, 2, 1, identity, np.array([-5.0, -5.0]), np.array([5.0, 5.0]))


def fill(buffer: ReplayBuffer, trajectories: int, length: int, start_id: int = 0) -> ReplayBuffer:
    """Store trajectories whose states read (trajectory id, step)."""
    for t in range(start_id, start_id + trajectories):
        for i in range(length):
            buffer.store(Transition(
                np.array([t, i], dtype=float),
                np.array([0.0]),
                np.array([t, i + 1], dtype=float),
                trajectory_id=t,
            ))
    return buffer


class TestReplayStorage(unittest.TestCase):
    """Test storing and evicting transitions."""

    def test_store_assigns_step_indices(self):
        """Test the n-th transition of a trajectory gets step index n."""
        # Arrange
        buffer = fill(make_buffer(), trajectories=2, length=4)

        # Act
        indices = buffer.trajectory_indices(1)

        # Assert
        self.assertEqual(len(buffer), 8)
        np.testing.assert_array_equal(indices, [0, 1, 2, 3])
        self.assertEqual(buffer.transition(5).step_index, 1)

    def test_eviction_is_oldest_first(self):
        """Test a full buffer drops its oldest transitions."""
        # Arrange
        buffer = fill(make_buffer(capacity=5), trajectories=2, length=4)

        # Act
        states, _, _ = buffer.stored_arrays()

        # Assert
        self.assertEqual(len(buffer), 5)
        np.testing.assert_array_equal(states[:, 0], [0, 1, 1, 1, 1])
        np.testing.assert_array_equal(states[0], [0, 3])
        np.testing.assert_array_equal(buffer.trajectory_indices(0), [3])

    def test_fully_evicted_trajectory_disappears(self):
        """Test a trajectory leaves the index once its newest step is gone."""
        # Arrange
        buffer = fill(make_buffer(capacity=4), trajectories=2, length=4)

        # Assert
        self.assertEqual(len(buffer.trajectory_indices(0)), 0)

    def test_single_slot_buffer_keeps_counting_steps(self):
        """Test capacity 1 still numbers a trajectory's steps 0, 1, 2."""
        # Arrange
        buffer = make_buffer(capacity=1)
        seen = []

        # Act
        for i in range(3):
            buffer.store(Transition(np.array([0.0, i]), np.zeros(1), np.array([0.0, i + 1]), trajectory_id=0))
            seen.append(buffer.transition(0).step_index)
        batch = buffer.sample_relabeled(8, RelabelStrategy.FUTURE_ON_TRAJECTORY, 2, np.random.default_rng(0))

        # Assert
        self.assertEqual(seen, [0, 1, 2])
        np.testing.assert_array_equal(buffer.trajectory_indices(0), [2])
        np.testing.assert_array_equal(batch.goals, np.tile([0.0, 3.0], (8, 1)))

    def test_partly_evicted_trajectory_relabels_within_what_is_left(self):
        """Test future goals stay on the surviving tail of a trajectory."""
        # Arrange
        buffer = fill(make_buffer(capacity=3), trajectories=1, length=5)
        buffer = fill(buffer, trajectories=1, length=1, start_id=1)

        # Act
        batch = buffer.sample_relabeled(500, RelabelStrategy.FUTURE_ON_TRAJECTORY, 4, np.random.default_rng(1))

        # Assert
        np.testing.assert_array_equal(buffer.trajectory_indices(0), [3, 4])
        np.testing.assert_array_equal(batch.goals[:, 0], batch.states[:, 0])
        self.assertTrue(np.all(batch.goals[:, 1] > batch.states[:, 1]))
        self.assertTrue(np.all(batch.goals[batch.states[:, 0] == 0, 1] <= 5))

    def test_wrong_width_rejected(self):
        """Test state widths are validated on store."""
        # Act & Assert
        with self.assertRaises(ShapeError):
            make_buffer().store(Transition(np.zeros(3), np.zeros(1), np.zeros(3)))

    def test_non_finite_transition_rejected(self):
        """Test NaN states never enter the buffer."""
        # Arrange
        buffer = make_buffer()

        # Act & Assert
        with self.assertRaises(NumericHealthError):
            buffer.store(Transition(np.array([np.nan, 0.0]), np.zeros(1), np.zeros(2)))
        self.assertEqual(len(buffer), 0)

    def test_capacity_must_be_positive(self):
        """Test capacity 0 is rejected."""
        # Act & Assert
        with self.assertRaises(ReplayError):
            make_buffer(capacity=0)


class TestRelabeling(unittest.TestCase):
    """Test sample-time goal and horizon relabeling."""

    def setUp(self):
        self.buffer = fill(make_buffer(), trajectories=10, length=20)
        self.rng = np.random.default_rng(0)

    def test_empty_buffer_raises(self):
        """Test sampling an empty buffer is a ReplayError."""
        # Act & Assert
        with self.assertRaises(ReplayError):
            make_buffer().sample_relabeled(4, RelabelStrategy.FUTURE_ON_TRAJECTORY, 5, self.rng)

    def test_future_goals_are_strictly_later_on_same_trajectory(self):
        """Test future relabeling picks a later state of the same trajectory."""
        # Act
        batch = self.buffer.sample_relabeled(2000, RelabelStrategy.FUTURE_ON_TRAJECTORY, 10, self.rng)

        # Assert
        np.testing.assert_array_equal(batch.goals[:, 0], batch.states[:, 0])
        self.assertTrue(np.all(batch.goals[:, 1] > batch.states[:, 1]))
        self.assertTrue(np.all(batch.goals[:, 1] <= 20))

    def test_future_window_caps_lookahead(self):
        """Test future_window limits how far ahead goals come from."""
        # Act
        batch = self.buffer.sample_relabeled(
            2000, RelabelStrategy.FUTURE_ON_TRAJECTORY, 10, self.rng, future_window=3,
        )

        # Assert
        ahead = batch.goals[:, 1] - batch.states[:, 1]
        self.assertTrue(np.all((ahead >= 1) & (ahead <= 3)))

    def test_last_step_uses_its_own_next_state(self):
        """Test a trajectory's final step can only relabel with its own s'."""
        # Arrange
        buffer = fill(make_buffer(), trajectories=1, length=1)

        # Act
        batch = buffer.sample_relabeled(10, RelabelStrategy.FUTURE_ON_TRAJECTORY, 3, self.rng)

        # Assert
        np.testing.assert_array_equal(batch.goals, batch.next_states)

    def test_buffer_goals_come_from_stored_next_states(self):
        """Test uniform-buffer goals are achieved goals of stored transitions."""
        # Act
        batch = self.buffer.sample_relabeled(500, RelabelStrategy.UNIFORM_FROM_BUFFER, 5, self.rng)

        # Assert
        _, _, next_states = self.buffer.stored_arrays()
        stored = {tuple(row) for row in next_states}
        self.assertTrue(all(tuple(g) in stored for g in batch.goals))

    def test_goal_box_goals_lie_in_box(self):
        """Test goal-box goals respect the bounds and have no source."""
        # Act
        batch = self.buffer.sample_relabeled(500, RelabelStrategy.UNIFORM_FROM_GOAL_BOX, 5, self.rng)

        # Assert
        self.assertTrue(np.all(np.abs(batch.goals) <= 5.0))
        np.testing.assert_array_equal(batch.goal_sources, -1)

    def test_horizons_are_uniform(self):
        """Test tau is uniform on {0..tau_max} (chi-square, p > 0.001)."""
        # Act
        batch = self.buffer.sample_relabeled(100_000, RelabelStrategy.UNIFORM_FROM_BUFFER, 9, self.rng)
        counts = np.bincount(batch.horizons, minlength=10)

        # Assert
        self.assertEqual(len(counts), 10)
        self.assertGreater(stats.chisquare(counts).pvalue, 1e-3)

    def test_next_goals_are_goal_map_of_next_states(self):
        """Test next_goals carries phi(s') for the distance term."""
        # Act
        batch = self.buffer.sample_relabeled(50, RelabelStrategy.FUTURE_ON_TRAJECTORY, 0, self.rng)

        # Assert
        np.testing.assert_array_equal(batch.next_goals, batch.next_states)
        np.testing.assert_array_equal(batch.horizons, 0)

    def test_sampling_does_not_modify_buffer(self):
        """Test sampling leaves stored contents untouched."""
        # Arrange
        before = self.buffer.to_frame()

        # Act
        batch = self.buffer.sample_relabeled(64, RelabelStrategy.FUTURE_ON_TRAJECTORY, 5, self.rng)
        batch.states[:] = 99.0

        # Assert
        pd.testing.assert_frame_equal(before, self.buffer.to_frame())

    def test_negative_tau_max_rejected(self):
        """Test tau_max < 0 is a ReplayError."""
        # Act & Assert
        with self.assertRaises(ReplayError):
            self.buffer.sample_relabeled(4, RelabelStrategy.FUTURE_ON_TRAJECTORY, -1, self.rng)

    def test_strategy_parse_accepts_values_and_names(self):
        """Test config spellings of the relabel strategy."""
        # Assert
        self.assertIs(RelabelStrategy.parse('future'), RelabelStrategy.FUTURE_ON_TRAJECTORY)
        self.assertIs(RelabelStrategy.parse('UniformFromBuffer'), RelabelStrategy.UNIFORM_FROM_BUFFER)
        self.assertIs(RelabelStrategy.parse('uniform_from_goal_box'), RelabelStrategy.UNIFORM_FROM_GOAL_BOX)
        with self.assertRaises(ConfigError):
            RelabelStrategy.parse('hindsight')


class TestReplayExport(unittest.TestCase):
    """Test the CSV debug dump."""

    def test_dump_csv_writes_one_row_per_transition(self):
        """Test the dump has trajectory bookkeeping and flattened vectors."""
        # Arrange
        buffer = fill(make_buffer(), trajectories=2, length=3)

        with tempfile.TemporaryDirectory() as temp_dir:
            # Act
            path = buffer.dump_csv(Path(temp_dir) / "replay.csv")
            frame = pd.read_csv(path)

        # Assert
        self.assertEqual(len(frame), 6)
        self.assertEqual(
            list(frame.columns),
            ['trajectory_id', 'step_index', 's0', 's1', 'a0', 'next_s0', 'next_s1'],
        )

    def test_dump_uses_newline_terminated_rows(self):
        """Test the dump ends every row with a bare newline."""
        # Arrange
        buffer = fill(make_buffer(), trajectories=1, length=2)

        with tempfile.TemporaryDirectory() as temp_dir:
            # Act
            raw = buffer.dump_csv(Path(temp_dir) / "replay.csv").read_bytes()

        # Assert
        self.assertNotIn(b'\r', raw)
        self.assertTrue(raw.endswith(b'\n'))
        self.assertEqual(raw.count(b'\n'), 3)


if __name__ == '__main__':
    unittest.main()
