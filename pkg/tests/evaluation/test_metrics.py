"""Test the dmlm.evaluation.metrics module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Third Party
import numpy as np
import pytest

# dmlm
import dmlm.errors
import dmlm.evaluation.metrics

# =============================================================================
# GLOBALS
# =============================================================================

_SCORES = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.3, 0.7]])
_LABELS = np.array([0, 1, 1, 1])


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _pairwise_auc(positive_scores, negative_scores):
    """Count correctly ordered positive and negative pairs, ties as halves."""
    total = 0.0

    for positive in positive_scores:
        for negative in negative_scores:
            if positive > negative:
                total += 1.0

            elif positive == negative:
                total += 0.5

    return total / (len(positive_scores) * len(negative_scores))


# =============================================================================
# TESTS
# =============================================================================


class TestEvalResult:
    """Test dmlm.evaluation.metrics.EvalResult."""

    def test_to_dict(self):
        """Test EvalResult.to_dict."""
        inst = dmlm.evaluation.metrics.EvalResult(
            auc=1.0,
            f1=0.5,
            acc=0.5,
            per_class=(dmlm.evaluation.metrics.ClassMetrics(0, "a", None, 0.0, 0),),
        )

        assert inst.to_dict() == {
            "auc": 1.0,
            "f1": 0.5,
            "acc": 0.5,
            "per_class": (
                {"class_id": 0, "name": "a", "auc": None, "f1": 0.0, "support": 0},
            ),
            "warnings": (),
        }


class Test_compute_metrics:
    """Test dmlm.evaluation.metrics.compute_metrics()."""

    def test(self):
        """Test hand-computed metrics."""
        result = dmlm.evaluation.metrics.compute_metrics(
            _SCORES, _LABELS, ["edema", "effusion"]
        )

        assert result.auc == pytest.approx(1.0)
        assert result.f1 == pytest.approx((2 / 3 + 0.8) / 2)
        assert result.acc == pytest.approx(0.75)
        assert [item.name for item in result.per_class] == ["edema", "effusion"]
        assert [item.support for item in result.per_class] == [1, 3]
        assert not result.warnings

    def test_pairwise_oracle(self):
        """Test macro AUC and accuracy against brute force pair counting."""
        rng = np.random.default_rng(0)

        for _ in range(100):
            n_samples = int(rng.integers(6, 40))
            n_classes = int(rng.integers(2, 6))

            # Coarse scores so ties occur.
            scores = rng.integers(0, 5, size=(n_samples, n_classes)) / 4.0
            labels = rng.integers(0, n_classes, size=n_samples)

            expected = {}

            for class_id in range(n_classes):
                positives = labels == class_id

                if positives.any() and not positives.all():
                    expected[class_id] = _pairwise_auc(
                        scores[positives, class_id], scores[~positives, class_id]
                    )

            if not expected:
                continue

            result = dmlm.evaluation.metrics.compute_metrics(scores, labels)

            assert result.auc == pytest.approx(np.mean(list(expected.values())))
            assert result.acc == pytest.approx(
                np.mean(np.argmax(scores, axis=1) == labels)
            )

            for item in result.per_class:
                if item.class_id in expected:
                    assert item.auc == pytest.approx(expected[item.class_id])

                else:
                    assert item.auc is None

    def test_absent_class(self):
        """Test that a class missing from the labels has no AUC."""
        scores = np.hstack([_SCORES, np.zeros((4, 1))])

        result = dmlm.evaluation.metrics.compute_metrics(scores, _LABELS)

        assert result.per_class[2].auc is None
        assert result.per_class[2].name == "2"
        assert result.auc == pytest.approx(1.0)
        assert result.f1 == pytest.approx((2 / 3 + 0.8) / 2)
        assert len(result.warnings) == 1
        assert "has no AUC" in result.warnings[0]

    def test_ties(self):
        """Test that argmax ties go to the lowest class id."""
        scores = np.full((2, 2), 0.5)

        result = dmlm.evaluation.metrics.compute_metrics(scores, np.array([0, 1]))

        assert result.acc == pytest.approx(0.5)
        assert result.auc == pytest.approx(0.5)

    def test_single_class(self):
        """Test labels of a single class."""
        with pytest.raises(dmlm.errors.DegenerateInputError):
            dmlm.evaluation.metrics.compute_metrics(_SCORES, np.zeros(4, dtype=int))

    def test_empty(self):
        """Test zero samples."""
        with pytest.raises(dmlm.errors.DegenerateInputError):
            dmlm.evaluation.metrics.compute_metrics(
                np.zeros((0, 2)), np.zeros(0, dtype=int)
            )

    @pytest.mark.parametrize(
        "scores, labels",
        (
            (np.zeros(4), _LABELS),
            (_SCORES, np.array([0, 1])),
            (_SCORES, np.array([0, 1, 2, 1])),
            (_SCORES, np.array([0, 1, -1, 1])),
        ),
    )
    def test_invalid(self, scores, labels):
        """Test mismatched shapes and out of range labels."""
        with pytest.raises(dmlm.errors.ContractViolationError):
            dmlm.evaluation.metrics.compute_metrics(scores, labels)
