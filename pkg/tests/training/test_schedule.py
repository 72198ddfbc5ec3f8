"""Test the dmlm.training.schedule module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Third Party
import pytest

# dmlm
import dmlm.errors
import dmlm.training.schedule

# =============================================================================
# TESTS
# =============================================================================


class TestLRSchedule:
    """Test dmlm.training.schedule.LRSchedule."""

    @pytest.mark.parametrize("total_steps, warmup_steps", ((0, 0), (5, 5), (5, -1)))
    def test___post_init__(self, total_steps, warmup_steps):
        """Test invalid step counts."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.training.schedule.LRSchedule(total_steps, warmup_steps)

    # Methods

    @pytest.mark.parametrize(
        "total_steps, fraction, expected",
        (
            (100, 0.1, 10),
            (1, 0.1, 0),
            (3, 0.9, 2),
        ),
    )
    def test_from_fraction(self, total_steps, fraction, expected):
        """Test LRSchedule.from_fraction."""
        result = dmlm.training.schedule.LRSchedule.from_fraction(total_steps, fraction)

        assert result.warmup_steps == expected

    @pytest.mark.parametrize(
        "step, expected",
        (
            (0, 0.0),
            (2, 0.5),
            (4, 1.0),
            (7, 0.5),
            (10, 0.0),
            (50, 0.0),
        ),
    )
    def test_factor(self, step, expected):
        """Test LRSchedule.factor."""
        inst = dmlm.training.schedule.LRSchedule(11, 4)

        assert inst.factor(step) == pytest.approx(expected, abs=1e-12)

    def test_factor__monotone_decay(self):
        """Test that the factor never rises after warmup."""
        inst = dmlm.training.schedule.LRSchedule(50, 5)

        values = [inst.factor(step) for step in range(5, 50)]

        assert all(later <= earlier for earlier, later in zip(values, values[1:]))

    def test_factor__single_step(self):
        """Test a one step run."""
        assert dmlm.training.schedule.LRSchedule(1, 0).factor(0) == 1.0

    def test_factor__negative(self):
        """Test a negative step."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.training.schedule.LRSchedule(5, 1).factor(-1)
