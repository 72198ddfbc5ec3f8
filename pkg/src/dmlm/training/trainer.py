"""The training loop.

Each step encodes the unmasked inputs once. Those outputs provide the
alignment term (with gradients) and, detached, the teacher targets and the
patch saliency for masking. The masked student passes are conditioned on the
other modality's pooled mean.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import math
import pathlib
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

# Third Party
import torch

# dmlm
from dmlm.datasets.batching import Batch, batch_iter
from dmlm.datasets.synthetic import PairedSample
from dmlm.encoders import DualEncoder, EncoderConfig
from dmlm.errors import NonFiniteLossError
from dmlm.masking import MaskPlan, appearance_saliency, plan_sample_mask
from dmlm.prob_core import GaussianSequence
from dmlm.training.checkpoint import Checkpoint, check_config, save_checkpoint
from dmlm.training.config import TrainingConfig
from dmlm.training.losses import (
    LossBreakdown,
    ReconstructionLoss,
    align_loss,
    dmlm_loss,
    plans_to_masks,
    pooled_pair,
    total_loss,
)
from dmlm.training.metrics_log import MetricsLog
from dmlm.training.schedule import LRSchedule

_logger = logging.getLogger(__name__)


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class StepLosses:
    """The differentiable losses of one step and their float breakdown."""

    reconstruction: ReconstructionLoss
    align: torch.Tensor
    total: torch.Tensor
    breakdown: LossBreakdown
    plans: Tuple[MaskPlan, ...]


class Trainer:
    """Own a model, its optimizer and the learning rate schedule.

    The backbone and the distribution heads form two AdamW parameter groups.
    The backbone stays at encoder_lr for the whole run; only the heads follow
    the warmup and cosine schedule up to peak_lr.

    :param model: The model to train.
    :param config: The training configuration.
    :param total_steps: The number of optimizer steps of the run.

    """

    def __init__(
        self, model: DualEncoder, config: TrainingConfig, total_steps: int
    ) -> None:
        self._model = model
        self._config = config
        self._schedule = LRSchedule.from_fraction(total_steps, config.warmup_fraction)
        self._optimizer = torch.optim.AdamW(
            [
                {"params": list(model.backbone_parameters()), "lr": config.encoder_lr},
                {"params": list(model.head_parameters()), "lr": config.peak_lr},
            ],
            weight_decay=config.weight_decay,
        )
        self._step = 0

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def config(self) -> TrainingConfig:
        """The training configuration."""
        return self._config

    @property
    def model(self) -> DualEncoder:
        """The model being trained."""
        return self._model

    @property
    def optimizer(self) -> torch.optim.AdamW:
        """The optimizer."""
        return self._optimizer

    @property
    def schedule(self) -> LRSchedule:
        """The learning rate schedule."""
        return self._schedule

    @property
    def step(self) -> int:
        """The number of completed optimizer steps."""
        return self._step

    # -------------------------------------------------------------------------
    # NON-PUBLIC METHODS
    # -------------------------------------------------------------------------

    def _apply_schedule(self) -> float:
        """Set the head learning rate of the current step.

        :return: The head learning rate.

        """
        backbone, heads = self.optimizer.param_groups

        backbone["lr"] = self.config.encoder_lr
        heads["lr"] = self.config.peak_lr * self.schedule.factor(self.step)

        return heads["lr"]

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def checkpoint_config(self) -> Dict[str, Dict[str, Any]]:
        """Get the configuration sections embedded in checkpoints."""
        return {
            "encoder": self.model.config.to_dict(),
            "training": self.config.to_dict(),
        }

    def fit(
        self,
        dataset: Sequence[PairedSample],
        metrics_log: Optional[MetricsLog] = None,
        on_step: Optional[Callable[[int, LossBreakdown], None]] = None,
    ) -> List[LossBreakdown]:
        """Train until the schedule's final step.

        Resumed trainers skip the batches of already completed steps, so the
        data order matches an uninterrupted run.

        :param dataset: The training samples.
        :param metrics_log: Optional open metrics log.
        :param on_step: Optional callback receiving the step and its losses.
        :return: The losses of the steps run.

        """
        batches_per_epoch = math.ceil(len(dataset) / self.config.batch_size)
        epoch = self.step // batches_per_epoch

        history = []

        while self.step < self.schedule.total_steps:
            batches = batch_iter(
                dataset, self.config.batch_size, self.config.seed, True, epoch
            )

            for index, batch in enumerate(batches):
                if epoch * batches_per_epoch + index < self.step:
                    continue

                if self.step >= self.schedule.total_steps:
                    break

                step = self.step
                lr = self._apply_schedule()
                breakdown = self.train_step(batch)

                if metrics_log is not None:
                    metrics_log.write(step, lr, breakdown)

                if step % self.config.log_every == 0:
                    _logger.info(
                        "step %s: total=%.4f dmlm=%.4f align=%.4f lr=%.2e",
                        step,
                        breakdown.total,
                        breakdown.dmlm_total,
                        breakdown.align,
                        lr,
                    )

                if on_step is not None:
                    on_step(step, breakdown)

                history.append(breakdown)

            epoch += 1

        return history

    def resume(self, checkpoint: Checkpoint) -> None:
        """Continue from a checkpoint written by save().

        The optimizer moments restart from zero; the schedule continues at the
        stored step.

        :param checkpoint: The checkpoint.
        :return:

        """
        check_config(checkpoint.config, self.checkpoint_config())

        checkpoint.restore(self.model)
        self._step = checkpoint.step

    def save(
        self, path: pathlib.Path, metadata: Optional[Mapping[str, Any]] = None
    ) -> None:
        """Write a checkpoint of the current parameters and step.

        :param path: The checkpoint file.
        :param metadata: Optional extra metadata such as the vocabulary digest.
        :return:

        """
        save_checkpoint(path, self.model, self.checkpoint_config(), self.step, metadata)

    def train_step(self, batch: Batch) -> LossBreakdown:
        """Run one optimizer step at the scheduled learning rates.

        :param batch: The batch.
        :return: The step's losses.

        """
        self._apply_schedule()
        self.model.train()

        losses = compute_step_losses(self.model, batch, self.config, self.step)

        if not losses.breakdown.is_finite():
            raise NonFiniteLossError(
                f"Non-finite loss at step {self.step}: {losses.breakdown.to_dict()}",
                losses.breakdown,
            )

        self.optimizer.zero_grad(set_to_none=True)
        losses.total.backward()
        self.optimizer.step()

        self._step += 1

        return losses.breakdown


# =============================================================================
# FUNCTIONS
# =============================================================================


def build_mask_plans(
    batch: Batch,
    teacher_text: GaussianSequence,
    teacher_image: GaussianSequence,
    config: TrainingConfig,
    step: int,
) -> List[MaskPlan]:
    """Plan the masks of every sample in a batch.

    Sample i of step s is seeded with (seed, s, i).

    :param batch: The batch.
    :param teacher_text: Unmasked text outputs, shape (B, L, d).
    :param teacher_image: Unmasked image outputs, shape (B, P, d).
    :param config: The training configuration.
    :param step: The step.
    :return: One plan per sample.

    """
    plans = []

    for row, sample in enumerate(batch.samples):
        saliency = None

        if config.masking_strategy == "appearance":
            start, end = sample.text.section_spans.get("appearance", (0, 0))

            appearance = (
                GaussianSequence(
                    teacher_text.mu[row, start:end],
                    teacher_text.log_var[row, start:end],
                )
                if end > start
                else None
            )

            saliency = appearance_saliency(
                GaussianSequence(teacher_image.mu[row], teacher_image.log_var[row]),
                appearance,
            )

        plans.append(
            plan_sample_mask(
                sample.text,
                len(sample.image),
                config.text_mask_ratio,
                config.image_base_ratio,
                config.masking_strategy,
                (config.seed, step, row),
                saliency=saliency,
                temperature=config.mask_temperature,
            )
        )

    fallbacks = sum(plan.saliency_fallback for plan in plans)

    if fallbacks:
        _logger.debug("Step %s: %s samples used uniform saliency", step, fallbacks)

    return plans


def build_model(
    config: EncoderConfig, seed: int, dtype: torch.dtype = torch.float32
) -> DualEncoder:
    """Build a freshly initialized model.

    :param config: The encoder configuration.
    :param seed: The initialization seed.
    :param dtype: The parameter dtype.
    :return: The model.

    """
    torch.manual_seed(seed)

    return DualEncoder(config).to(dtype)


def compute_step_losses(
    model: DualEncoder,
    batch: Batch,
    config: TrainingConfig,
    step: int,
    targets: Optional[Tuple[GaussianSequence, GaussianSequence]] = None,
    plans: Optional[Sequence[MaskPlan]] = None,
) -> StepLosses:
    """Compute the losses of one step without updating parameters.

    Passing targets and plans holds them fixed, as when differentiating the
    loss numerically.

    :param model: The model.
    :param batch: The batch.
    :param config: The training configuration.
    :param step: The step, which seeds the mask plans.
    :param targets: Optional teacher text and image targets.
    :param plans: Optional mask plans, one per sample.
    :return: The losses.

    """
    patches = batch.patches.to(model.dtype)

    text_full = model.text(batch.token_ids, padding_mask=batch.padding_mask)
    image_full = model.image(patches)

    text_pooled, image_pooled = pooled_pair(text_full, image_full, batch.padding_mask)

    if not all(
        bool(torch.isfinite(tensor).all())
        for tensor in (
            text_full.mu,
            text_full.log_var,
            image_full.mu,
            image_full.log_var,
        )
    ):
        nan = float("nan")
        raise NonFiniteLossError(
            f"Non-finite encoder outputs at step {step}",
            LossBreakdown.from_parts(nan, nan, nan, config.loss_lambda),
        )

    teacher_text, teacher_image = targets or (text_full.detach(), image_full.detach())

    if plans is None:
        plans = build_mask_plans(batch, teacher_text, teacher_image, config, step)

    text_mask, image_mask = plans_to_masks(plans, len(teacher_text), len(teacher_image))

    student_text = model.text(
        batch.token_ids,
        padding_mask=batch.padding_mask,
        masked=text_mask,
        context=image_pooled.mu,
    )
    student_image = model.image(patches, masked=image_mask, context=text_pooled.mu)

    reconstruction = dmlm_loss(
        student_text, student_image, teacher_text, teacher_image, plans
    )
    align = align_loss(text_pooled, image_pooled)

    total = total_loss(reconstruction.total, align, config.loss_lambda)

    breakdown = LossBreakdown.from_parts(
        float(reconstruction.text),
        float(reconstruction.image),
        float(align),
        config.loss_lambda,
        n_masked_text=reconstruction.n_text,
        n_masked_image=reconstruction.n_image,
    )

    return StepLosses(
        reconstruction=reconstruction,
        align=align,
        total=total,  # type: ignore[arg-type]
        breakdown=breakdown,
        plans=tuple(plans),
    )
