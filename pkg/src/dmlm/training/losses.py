"""Masked distribution reconstruction and alignment losses.

The reconstruction term compares student distributions (masked input) with
teacher distributions (unmasked input, no gradient) at the masked positions
using KL(student || teacher). The alignment term is the 2-Wasserstein distance
between the pooled text and image distributions of matched pairs.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Dict, Optional, Sequence, Tuple, Union

# Third Party
import torch

# dmlm
from dmlm.errors import ContractViolationError, DegenerateInputError
from dmlm.masking import MaskPlan
from dmlm.prob_core import (
    DiagGaussian,
    GaussianSequence,
    kl_diag,
    pool_sequence,
    w2_diag,
)

# Imports for type checking.
if TYPE_CHECKING:
    from dmlm.datasets.batching import Batch
    from dmlm.encoders import DualEncoder


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class LossBreakdown:
    """The loss terms of one step, as plain floats."""

    dmlm_text: float
    dmlm_image: float
    dmlm_total: float
    align: float
    total: float
    n_masked_text: int
    n_masked_image: int

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_parts(
        cls,
        dmlm_text: float,
        dmlm_image: float,
        align: float,
        loss_lambda: float,
        n_masked_text: int = 0,
        n_masked_image: int = 0,
    ) -> LossBreakdown:
        """Assemble a breakdown, deriving the sums from the parts.

        :param dmlm_text: The text reconstruction loss.
        :param dmlm_image: The image reconstruction loss.
        :param align: The alignment loss.
        :param loss_lambda: The reconstruction weight.
        :param n_masked_text: The number of masked text positions.
        :param n_masked_image: The number of masked image positions.
        :return: The breakdown.

        """
        dmlm_total = dmlm_text + dmlm_image

        return cls(
            dmlm_text=dmlm_text,
            dmlm_image=dmlm_image,
            dmlm_total=dmlm_total,
            align=align,
            total=total_loss(dmlm_total, align, loss_lambda),
            n_masked_text=n_masked_text,
            n_masked_image=n_masked_image,
        )

    def is_finite(self) -> bool:
        """Whether every term is finite."""
        return all(
            math.isfinite(value)
            for value in (
                self.dmlm_text,
                self.dmlm_image,
                self.dmlm_total,
                self.align,
                self.total,
            )
        )

    def to_dict(self) -> Dict[str, Union[float, int]]:
        """Convert to a dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class ReconstructionLoss:
    """Masked reconstruction terms as tensors, with the masked position counts."""

    text: torch.Tensor
    image: torch.Tensor
    n_text: int
    n_image: int

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def total(self) -> torch.Tensor:
        """The sum of the text and image terms."""
        return self.text + self.image


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _as_batched(seq: GaussianSequence) -> GaussianSequence:
    """Add a batch dimension to an unbatched sequence.

    :param seq: The sequence, shape (L, d) or (B, L, d).
    :return: The sequence with shape (B, L, d).

    """
    if seq.mu.dim() == 2:
        return GaussianSequence(seq.mu.unsqueeze(0), seq.log_var.unsqueeze(0))

    return seq


def _masked_mean_kl(
    student: GaussianSequence, teacher: GaussianSequence, mask: torch.Tensor
) -> Tuple[torch.Tensor, int]:
    """Average KL(student || teacher) over masked positions.

    Each sample's masked positions are averaged first, then samples with at
    least one masked position are averaged.

    :param student: The student sequences, shape (B, L, d).
    :param teacher: The teacher sequences, shape (B, L, d).
    :param mask: True at masked positions, shape (B, L).
    :return: The loss and the number of masked positions.

    """
    count = int(mask.sum())

    if not count:
        return student.mu.new_zeros(()), 0

    divergence = kl_diag(
        DiagGaussian(student.mu, student.log_var),
        DiagGaussian(teacher.mu, teacher.log_var),
        check=False,
    )

    weights = mask.to(divergence.dtype)
    per_sample_counts = weights.sum(dim=-1)
    has_mask = per_sample_counts > 0

    masked_divergence = torch.where(mask, divergence, torch.zeros_like(divergence))
    per_sample = masked_divergence.sum(dim=-1)[has_mask] / per_sample_counts[has_mask]

    return per_sample.mean(), count


# =============================================================================
# FUNCTIONS
# =============================================================================


def align_loss(
    text_pooled: DiagGaussian,
    image_pooled: DiagGaussian,
    pair_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Average the W2 distance between the pooled distributions of matched pairs.

    :param text_pooled: Pooled text distributions, batch shape (B,).
    :param image_pooled: Pooled image distributions, batch shape (B,).
    :param pair_mask: Optional boolean (B, B) matrix, True where text i matches image j.
        Defaults to the diagonal.
    :return: The mean distance.

    """
    if (
        text_pooled.batch_shape != image_pooled.batch_shape
        or len(text_pooled.batch_shape) != 1
    ):
        raise ContractViolationError(
            "Pooled text and image batches must both have shape (B, d)"
        )

    size = text_pooled.batch_shape[0]

    if pair_mask is None:
        pair_mask = torch.eye(size, dtype=torch.bool)

    if tuple(pair_mask.shape) != (size, size):
        raise ContractViolationError(f"pair_mask must have shape ({size}, {size})")

    text_index, image_index = torch.nonzero(pair_mask, as_tuple=True)

    if not text_index.numel():
        raise DegenerateInputError("The pair mask has no matched pairs")

    distances = w2_diag(
        DiagGaussian(text_pooled.mu[text_index], text_pooled.log_var[text_index]),
        DiagGaussian(image_pooled.mu[image_index], image_pooled.log_var[image_index]),
        check=False,
    )

    return distances.mean()


def dmlm_loss(
    student_text: GaussianSequence,
    student_image: GaussianSequence,
    teacher_text: GaussianSequence,
    teacher_image: GaussianSequence,
    plans: Union[MaskPlan, Sequence[MaskPlan]],
) -> ReconstructionLoss:
    """Compute the masked reconstruction loss of each modality.

    Sequences may be unbatched (L, d) with a single plan, or batched (B, L, d)
    with one plan per sample. Positions outside the plans contribute nothing.

    :param student_text: Student text distributions.
    :param student_image: Student image distributions.
    :param teacher_text: Teacher text distributions.
    :param teacher_image: Teacher image distributions.
    :param plans: The mask plan(s).
    :return: The reconstruction terms.

    """
    if isinstance(plans, MaskPlan):
        plans = [plans]

    student_text = _as_batched(student_text)
    teacher_text = _as_batched(teacher_text)
    student_image = _as_batched(student_image)
    teacher_image = _as_batched(teacher_image)

    if student_text.mu.shape != teacher_text.mu.shape:
        raise ContractViolationError("Student and teacher text sequences must align")

    if student_image.mu.shape != teacher_image.mu.shape:
        raise ContractViolationError("Student and teacher image sequences must align")

    if (
        len(plans) != student_text.mu.shape[0]
        or len(plans) != student_image.mu.shape[0]
    ):
        raise ContractViolationError("Expected one mask plan per sample")

    text_mask, image_mask = plans_to_masks(plans, len(student_text), len(student_image))

    text, n_text = _masked_mean_kl(student_text, teacher_text, text_mask)
    image, n_image = _masked_mean_kl(student_image, teacher_image, image_mask)

    if not n_text and not n_image:
        raise DegenerateInputError("The mask plans are empty in both modalities")

    return ReconstructionLoss(text=text, image=image, n_text=n_text, n_image=n_image)


def plans_to_masks(
    plans: Sequence[MaskPlan], text_length: int, image_length: int
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Convert mask plans to boolean position masks.

    :param plans: One plan per sample.
    :param text_length: The (padded) text length.
    :param image_length: The number of patches.
    :return: The text and image masks, shapes (B, text_length) and (B, image_length).

    """
    text_mask = torch.zeros((len(plans), text_length), dtype=torch.bool)
    image_mask = torch.zeros((len(plans), image_length), dtype=torch.bool)

    for row, plan in enumerate(plans):
        if any(not 0 <= index < text_length for index in plan.text_indices):
            raise ContractViolationError("Text mask index out of range")

        if any(not 0 <= index < image_length for index in plan.image_indices):
            raise ContractViolationError("Image mask index out of range")

        text_mask[row, list(plan.text_indices)] = True
        image_mask[row, list(plan.image_indices)] = True

    return text_mask, image_mask


def pooled_pair(
    text: GaussianSequence,
    image: GaussianSequence,
    padding_mask: Optional[torch.Tensor] = None,
) -> Tuple[DiagGaussian, DiagGaussian]:
    """Pool batched text and image sequences, skipping padded text positions.

    :param text: Text sequences, shape (B, L, d).
    :param image: Image sequences, shape (B, P, d).
    :param padding_mask: Optional (B, L) mask, True at padding.
    :return: The pooled text and image distributions.

    """
    valid = None if padding_mask is None else ~padding_mask

    return pool_sequence(text, valid), pool_sequence(image)


def teacher_targets(
    model: DualEncoder, batch: Batch
) -> Tuple[GaussianSequence, GaussianSequence]:
    """Encode the unmasked inputs without tracking gradients.

    :param model: The dual encoder.
    :param batch: The batch.
    :return: The text and image target sequences.

    """
    with torch.no_grad():
        text = model.text(batch.token_ids, padding_mask=batch.padding_mask)
        image = model.image(batch.patches.to(model.dtype))

    return text.detach(), image.detach()


def total_loss(
    dmlm_total: Union[float, torch.Tensor],
    align: Union[float, torch.Tensor],
    loss_lambda: float,
) -> Union[float, torch.Tensor]:
    """Combine the two objectives.

    >>> round(total_loss(2.0, 1.0, 0.2), 12)
    1.2

    :param dmlm_total: The reconstruction loss.
    :param align: The alignment loss.
    :param loss_lambda: The reconstruction weight, in [0, 1].
    :return: loss_lambda * dmlm_total + (1 - loss_lambda) * align.

    """
    if not 0.0 <= loss_lambda <= 1.0:
        raise ContractViolationError(
            f"loss_lambda must lie in [0, 1], got {loss_lambda}"
        )

    return loss_lambda * dmlm_total + (1.0 - loss_lambda) * align
