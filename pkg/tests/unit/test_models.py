"""
Unit tests for core data models, validation guards and logging setup.

Educational Notes:
- Unit tests verify individual components in isolation
- Follow AAA pattern: Arrange, Act, Assert

Test Naming Convention:
- test_<what>_<condition>_<expected_result>
"""

import logging
import tempfile
import unittest
from pathlib import Path

import numpy as np

from tdm_lab.core.models import (
    ConfigError,
    HorizonError,
    InvariantViolation,
    NumericHealthError,
    OracleError,
    PlanningError,
    RelabeledBatch,
    ReplayError,
    ShapeError,
    TdmLabError,
)
from tdm_lab.utils.logging_config import (
    PACKAGE_LOGGER,
    TemporaryLogLevel,
    configure_worker_logging,
    log_exception_details,
    setup_logging,
)
from tdm_lab.utils.validation import (
    check_all_finite,
    check_dim,
    check_finite,
    check_range,
    check_same_shape,
    validate_file_exists,
)


class TestExceptionHierarchy(unittest.TestCase):
    """Test that every framework error shares one root."""

    def test_all_errors_derive_from_root(self):
        """Test one except clause catches every framework error."""
        # Arrange
        errors = [ShapeError, NumericHealthError, ConfigError, ReplayError,
                  HorizonError, PlanningError, OracleError, InvariantViolation]

        # Assert
        for error in errors:
            self.assertTrue(issubclass(error, TdmLabError), error.__name__)

    def test_numeric_error_context_in_message(self):
        """Test diagnostics appear in str() and can be extended."""
        # Arrange
        error = NumericHealthError("non-finite critic loss", {'batch_index': 4})

        # Act
        same = error.with_context(seed=2)

        # Assert
        self.assertIs(same, error)
        self.assertEqual(str(error), "non-finite critic loss [batch_index=4, seed=2]")

    def test_numeric_error_without_context(self):
        """Test the plain message is kept when no context is attached."""
        # Assert
        self.assertEqual(str(NumericHealthError("bad")), "bad")


class TestRelabeledBatch(unittest.TestCase):
    """Test the replay-to-learner batch type."""

    def test_row_gives_plain_values(self):
        """Test row() returns lists and an int horizon for diagnostics."""
        # Arrange
        batch = RelabeledBatch(
            states=np.array([[0.0, 1.0]]),
            actions=np.array([[0.5]]),
            next_states=np.array([[1.0, 1.0]]),
            goals=np.array([[2.0, 2.0]]),
            horizons=np.array([3]),
            next_goals=np.array([[1.0, 1.0]]),
        )

        # Act
        row = batch.row(0)

        # Assert
        self.assertEqual(len(batch), 1)
        self.assertEqual(row['tau'], 3)
        self.assertEqual(row['goal'], [2.0, 2.0])


class TestValidationGuards(unittest.TestCase):
    """Test the shared guard helpers."""

    def test_check_dim_names_both_dimensions(self):
        """Test mismatches report expected and actual widths."""
        # Act & Assert
        with self.assertRaises(ShapeError) as ctx:
            check_dim(5, 3, "critic input")
        self.assertIn("expected dimension 3, got 5", str(ctx.exception))

    def test_check_same_shape(self):
        """Test differing shapes raise ShapeError."""
        # Act & Assert
        check_same_shape(np.zeros((2, 3)), np.ones((2, 3)), "grads")
        with self.assertRaises(ShapeError):
            check_same_shape(np.zeros((2, 3)), np.zeros((3, 2)), "grads")

    def test_check_finite_reports_first_bad_index(self):
        """Test the first non-finite position lands in the context."""
        # Arrange
        values = np.array([[1.0, 2.0], [np.inf, np.nan]])

        # Act & Assert
        with self.assertRaises(NumericHealthError) as ctx:
            check_finite(values, "targets", {'episode': 7})
        self.assertEqual(ctx.exception.context['first_bad_index'], (1, 0))
        self.assertEqual(ctx.exception.context['episode'], 7)

    def test_check_all_finite_names_position(self):
        """Test the offending array position is named."""
        # Act & Assert
        with self.assertRaises(NumericHealthError) as ctx:
            check_all_finite([np.zeros(2), np.array([np.nan])], "grads")
        self.assertIn("grads[1]", str(ctx.exception))

    def test_check_range_is_inclusive(self):
        """Test both bounds are allowed."""
        # Act & Assert
        check_range(0.0, 0.0, 1.0, "rho")
        check_range(1.0, 0.0, 1.0, "rho")
        with self.assertRaises(ConfigError):
            check_range(1.01, 0.0, 1.0, "rho")

    def test_validate_file_exists(self):
        """Test missing paths and directories are config errors."""
        # Arrange
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "run.cfg"
            path.write_text("env = pointmass\n")

            # Act & Assert
            self.assertEqual(validate_file_exists(path), path)
            with self.assertRaises(ConfigError):
                validate_file_exists(Path(temp_dir) / "missing.cfg")
            with self.assertRaises(ConfigError):
                validate_file_exists(Path(temp_dir))


class TestLoggingConfig(unittest.TestCase):
    """Test logging setup and helpers."""

    def setUp(self):
        self.root = logging.getLogger()
        self.saved_handlers = list(self.root.handlers)
        self.saved_level = self.root.level
        self.saved_package_level = logging.getLogger(PACKAGE_LOGGER).level

    def tearDown(self):
        self.root.handlers[:] = self.saved_handlers
        self.root.setLevel(self.saved_level)
        logging.getLogger(PACKAGE_LOGGER).setLevel(self.saved_package_level)

    def test_setup_replaces_handlers(self):
        """Test repeated setup leaves exactly one console handler."""
        # Act
        setup_logging(logging.DEBUG)
        setup_logging(logging.INFO)

        # Assert
        self.assertEqual(len(self.root.handlers), 1)
        self.assertEqual(logging.getLogger(PACKAGE_LOGGER).level, logging.INFO)

    def test_setup_with_log_file(self):
        """Test the log file is created along with its parent directory."""
        # Arrange
        with tempfile.TemporaryDirectory() as temp_dir:
            log_file = Path(temp_dir) / "logs" / "run.log"

            # Act
            setup_logging(logging.INFO, log_file=log_file)
            logging.getLogger('tdm_lab.harness').info("evaluation point written")
            for handler in self.root.handlers:
                handler.flush()
                handler.close()

            # Assert
            self.assertIn("evaluation point written", log_file.read_text())

    def test_worker_logging_sets_package_level(self):
        """Test the pool initializer configures one handler at the given level."""
        # Act
        configure_worker_logging(logging.WARNING)

        # Assert
        self.assertEqual(len(self.root.handlers), 1)
        self.assertEqual(logging.getLogger(PACKAGE_LOGGER).level, logging.WARNING)

    def test_temporary_level_is_restored(self):
        """Test the previous level comes back after the block."""
        # Arrange
        planner_logger = logging.getLogger('tdm_lab.control')
        before = planner_logger.level

        # Act
        with TemporaryLogLevel(planner_logger, logging.ERROR) as inside:
            level_inside = inside.level

        # Assert
        self.assertEqual(level_inside, logging.ERROR)
        self.assertEqual(planner_logger.level, before)

    def test_exception_details_logged_at_error(self):
        """Test the exception type and message reach the log."""
        # Arrange
        log = logging.getLogger('tdm_lab.cli')

        # Act
        with self.assertLogs(log, level='ERROR') as captured:
            log_exception_details(log, ReplayError("buffer is empty"))

        # Assert
        self.assertIn("ReplayError: buffer is empty", captured.output[0])


if __name__ == '__main__':
    unittest.main()
