"""Post-training checks for representation collapse and lesion-focused saliency."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
from dataclasses import asdict, dataclass
from typing import Any, Dict, Sequence

# Third Party
import numpy as np
import torch
from scipy import stats

# dmlm
from dmlm.datasets.synthetic import PairedSample
from dmlm.encoders import DualEncoder, encode_image, encode_text
from dmlm.errors import DegenerateInputError
from dmlm.evaluation.zero_shot import encode_images
from dmlm.masking import appearance_saliency
from dmlm.prob_core import DiagGaussian, w2_diag

# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class CollapseDiagnostics:
    """Spread of the pooled image distributions.

    :param mean_log_var: The mean pooled log-variance.
    :param within_class_w2: The mean W2 between images of the same class.
    :param between_class_w2: The mean W2 between images of different classes.

    """

    mean_log_var: float
    within_class_w2: float
    between_class_w2: float

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def separated(self) -> bool:
        """Whether different classes are further apart than same-class pairs."""
        return self.between_class_w2 > self.within_class_w2

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a dictionary."""
        return {**asdict(self), "separated": self.separated}


@dataclass(frozen=True)
class SaliencyDiagnostics:
    """Appearance saliency on planted lesion patches against the background.

    :param lesion_mean: Mean saliency over lesion patches.
    :param background_mean: Mean saliency over the other patches.
    :param t_statistic: Paired t statistic of lesion minus background means.
    :param p_value: One-sided p value of lesion > background.
    :param n_images: The number of images compared.

    """

    lesion_mean: float
    background_mean: float
    t_statistic: float
    p_value: float
    n_images: int

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a dictionary."""
        return asdict(self)


# =============================================================================
# FUNCTIONS
# =============================================================================


def collapse_diagnostics(
    model: DualEncoder, samples: Sequence[PairedSample], batch_size: int = 64
) -> CollapseDiagnostics:
    """Measure the pooled image distributions for collapse.

    :param model: The model.
    :param samples: The samples, of at least two classes.
    :param batch_size: The number of images encoded at once.
    :return: The diagnostics.

    """
    labels = np.array([sample.label for sample in samples])

    if len(set(labels.tolist())) < 2:
        raise DegenerateInputError("Collapse diagnostics need samples of two classes")

    pooled = encode_images(model, [sample.image for sample in samples], batch_size)

    with torch.no_grad():
        distances = w2_diag(
            DiagGaussian(pooled.mu.unsqueeze(1), pooled.log_var.unsqueeze(1)),
            DiagGaussian(pooled.mu.unsqueeze(0), pooled.log_var.unsqueeze(0)),
        ).double().numpy()

    same = labels[:, None] == labels[None, :]
    off_diagonal = ~np.eye(len(labels), dtype=bool)

    within = distances[same & off_diagonal]

    return CollapseDiagnostics(
        mean_log_var=float(pooled.log_var.mean()),
        within_class_w2=float(within.mean()) if within.size else 0.0,
        between_class_w2=float(distances[~same].mean()),
    )


def lesion_saliency_diagnostics(
    model: DualEncoder, samples: Sequence[PairedSample]
) -> SaliencyDiagnostics:
    """Compare appearance saliency inside and outside the planted lesions.

    Samples whose text has no appearance span are skipped.

    :param model: The model.
    :param samples: The samples.
    :return: The diagnostics.

    """
    lesion_means = []
    background_means = []

    model.eval()

    with torch.no_grad():
        for sample in samples:
            appearance = sample.text.span_positions("appearance")

            if not appearance.size:
                continue

            text_seq = encode_text(model, sample.text)
            saliency = appearance_saliency(
                encode_image(model, sample.image), text_seq.select(appearance.tolist())
            )

            inside = np.zeros(len(sample.image), dtype=bool)
            inside[list(sample.lesion_region)] = True

            lesion_means.append(saliency.values[inside].mean())
            background_means.append(saliency.values[~inside].mean())

    if len(lesion_means) < 2:
        raise DegenerateInputError(
            "Saliency diagnostics need two samples with appearance text"
        )

    result = stats.ttest_rel(lesion_means, background_means, alternative="greater")

    return SaliencyDiagnostics(
        lesion_mean=float(np.mean(lesion_means)),
        background_mean=float(np.mean(background_means)),
        t_statistic=float(result.statistic),
        p_value=float(result.pvalue),
        n_images=len(lesion_means),
    )
