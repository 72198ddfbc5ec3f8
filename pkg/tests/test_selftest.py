"""Test the dmlm.selftest module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Third Party
import pytest

# dmlm
import dmlm.prob_core
import dmlm.selftest

# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def small_suites(mocker):
    """Shrink the oracle suites so they run quickly."""
    mocker.patch.object(dmlm.selftest, "ORACLE_PAIRS", 20)
    mocker.patch.object(dmlm.selftest, "MC_SAMPLES", 100_000)


def _wrong_kl(p, q, check=True):
    return dmlm.prob_core.w2_diag(p, q, check)


def _shifted_oracle(z_scores):
    """An oracle whose estimates sit the given z-scores from the closed form."""
    offsets = iter(z_scores)

    def _oracle(p, q, n_samples, seed, return_stderr=False):
        stderr = 0.01

        return float(dmlm.prob_core.kl_diag(p, q)) + next(offsets) * stderr, stderr

    return _oracle


# =============================================================================
# TESTS
# =============================================================================


class Test_check_closed_form_values:
    """Test dmlm.selftest.check_closed_form_values()."""

    def test(self):
        """Test the correct closed forms."""
        passed, detail = dmlm.selftest.check_closed_form_values()

        assert passed
        assert detail.startswith("max error")

    def test_mutated(self, mocker):
        """Test that a wrong KL formula is caught."""
        mocker.patch("dmlm.prob_core.kl_diag", side_effect=_wrong_kl)

        passed, _ = dmlm.selftest.check_closed_form_values()

        assert not passed


def test_check_kl_gradients():
    """Test dmlm.selftest.check_kl_gradients()."""
    passed, detail = dmlm.selftest.check_kl_gradients()

    assert passed
    assert detail.startswith(f"{dmlm.selftest.GRADCHECK_PAIRS} pairs")


class Test_check_kl_oracle:
    """Test dmlm.selftest.check_kl_oracle()."""

    def test(self, small_suites):
        """Test the closed form against the Monte-Carlo estimate."""
        passed, detail = dmlm.selftest.check_kl_oracle()

        assert passed, detail

    def test_mutated(self, mocker, small_suites):
        """Test that a wrong KL formula is caught."""
        mocker.patch("dmlm.prob_core.kl_diag", side_effect=_wrong_kl)

        passed, _ = dmlm.selftest.check_kl_oracle()

        assert not passed

    @pytest.mark.parametrize(
        "beyond, z_score, expected",
        (
            (0, 0.0, True),
            (2, 3.5, True),
            (3, 3.5, False),
            (1, 5.0, False),
        ),
    )
    def test_tolerance(self, mocker, beyond, z_score, expected):
        """Test the share of pairs allowed beyond 3 standard errors."""
        z_scores = [z_score] * beyond + [0.5] * (dmlm.selftest.ORACLE_PAIRS - beyond)

        mocker.patch(
            "dmlm.prob_core.mc_kl_oracle", side_effect=_shifted_oracle(z_scores)
        )

        passed, detail = dmlm.selftest.check_kl_oracle()

        assert passed == expected
        assert f"{beyond}% beyond 3 SE" in detail


def test_check_loss_gradients():
    """Test dmlm.selftest.check_loss_gradients()."""
    passed, detail = dmlm.selftest.check_loss_gradients()

    assert passed, detail
    assert detail.startswith(f"{dmlm.selftest.LOSS_PARAMETERS} parameters")


def test_check_w2_gradients():
    """Test dmlm.selftest.check_w2_gradients()."""
    passed, _ = dmlm.selftest.check_w2_gradients()

    assert passed


def test_check_w2_oracle(small_suites):
    """Test dmlm.selftest.check_w2_oracle()."""
    passed, detail = dmlm.selftest.check_w2_oracle()

    assert passed, detail


def test_run_selftest(mocker):
    """Test dmlm.selftest.run_selftest()."""
    names = (
        "check_closed_form_values",
        "check_kl_oracle",
        "check_w2_oracle",
        "check_kl_gradients",
        "check_w2_gradients",
        "check_loss_gradients",
    )

    for name in names:
        mocker.patch.object(dmlm.selftest, name, return_value=(True, "ok"))

    dmlm.selftest.check_w2_oracle.return_value = (False, "bad")

    result = dmlm.selftest.run_selftest(3)

    assert [item.passed for item in result] == [True, True, False, True, True, True]
    assert result[2].detail.startswith("bad (")
    assert result[2].name == "w2_diag vs quantile"

    dmlm.selftest.check_kl_oracle.assert_called_with(3)
    dmlm.selftest.check_closed_form_values.assert_called_with()
