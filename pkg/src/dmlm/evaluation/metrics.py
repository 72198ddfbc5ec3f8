"""Macro-averaged AUC, F1 and accuracy of zero-shot scores."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Third Party
import numpy as np
from sklearn import metrics

# dmlm
from dmlm.errors import ContractViolationError, DegenerateInputError

_logger = logging.getLogger(__name__)


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class ClassMetrics:
    """Metrics of a single class.

    auc is None when the class is absent from the labels (or is the only one).

    """

    class_id: int
    name: str
    auc: Optional[float]
    f1: float
    support: int


@dataclass(frozen=True)
class EvalResult:
    """Macro-averaged metrics with the per-class breakdown."""

    auc: float
    f1: float
    acc: float
    per_class: Tuple[ClassMetrics, ...]
    warnings: Tuple[str, ...] = field(default=())

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON compatible dictionary."""
        return asdict(self)


# =============================================================================
# FUNCTIONS
# =============================================================================


def compute_metrics(
    scores: np.ndarray, labels: np.ndarray, class_names: Optional[Sequence[str]] = None
) -> EvalResult:
    """Compute one-vs-rest AUC, argmax F1 and accuracy, macro averaged.

    Argmax ties go to the lowest class id. Classes without positive or
    negative labels have no AUC and are left out of the AUC average; F1 is
    averaged over the classes present in the labels.

    :param scores: Scores of shape (N, C).
    :param labels: True class ids of shape (N,).
    :param class_names: Optional class names for the breakdown.
    :return: The metrics.

    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)

    if scores.ndim != 2 or labels.shape != (scores.shape[0],):
        raise ContractViolationError("Expected scores (N, C) and labels (N,)")

    if not scores.shape[0]:
        raise DegenerateInputError("Cannot compute metrics of zero samples")

    n_classes = scores.shape[1]

    if labels.min() < 0 or labels.max() >= n_classes:
        raise ContractViolationError("Labels must lie in [0, C)")

    if class_names is not None:
        names = list(class_names)

    else:
        names = [str(idx) for idx in range(n_classes)]

    predictions = np.argmax(scores, axis=1)
    present = sorted(set(labels.tolist()))

    per_class_f1 = metrics.f1_score(
        labels,
        predictions,
        labels=list(range(n_classes)),
        average=None,
        zero_division=0,
    )

    warnings: List[str] = []
    per_class = []

    for class_id in range(n_classes):
        positives = labels == class_id
        auc = None

        if positives.all() or not positives.any():
            message = (
                f"Class {names[class_id]} has no AUC: "
                "it is absent from or fills the labels"
            )
            _logger.warning(message)
            warnings.append(message)

        else:
            auc = float(metrics.roc_auc_score(positives, scores[:, class_id]))

        per_class.append(
            ClassMetrics(
                class_id=class_id,
                name=names[class_id],
                auc=auc,
                f1=float(per_class_f1[class_id]),
                support=int(positives.sum()),
            )
        )

    aucs = [item.auc for item in per_class if item.auc is not None]

    if not aucs:
        raise DegenerateInputError("No class has both positive and negative labels")

    return EvalResult(
        auc=float(np.mean(aucs)),
        f1=float(np.mean([per_class_f1[class_id] for class_id in present])),
        acc=float(metrics.accuracy_score(labels, predictions)),
        per_class=tuple(per_class),
        warnings=tuple(warnings),
    )
