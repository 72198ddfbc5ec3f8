"""Training settings."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
from dataclasses import dataclass

# dmlm
from dmlm.datasets.synthetic import REPORT_STYLES
from dmlm.errors import ConfigError
from dmlm.masking import MASKING_STRATEGIES
from dmlm.schema import ConfigSection

# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class TrainingConfig(ConfigSection):
    """Training hyperparameters.

    loss_lambda weights the masked reconstruction term against the alignment
    term: total = loss_lambda * dmlm + (1 - loss_lambda) * align.

    """

    section_name = "training"

    loss_lambda: float = 0.2
    text_mask_ratio: float = 0.3
    image_base_ratio: float = 0.3
    epochs: int = 30
    max_steps: int = 0
    batch_size: int = 32
    peak_lr: float = 3e-4
    encoder_lr: float = 1e-5
    weight_decay: float = 0.05
    warmup_fraction: float = 0.1
    masking_strategy: str = "appearance"
    report_style: str = "structured"
    mask_temperature: float = 0.1
    log_every: int = 10
    checkpoint_every: int = 0
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.loss_lambda <= 1.0:
            raise ConfigError("training.loss_lambda must lie in [0, 1]")

        if not 0.0 < self.text_mask_ratio <= 1.0:
            raise ConfigError("training.text_mask_ratio must lie in (0, 1]")

        if not 0.0 < self.image_base_ratio < 1.0:
            raise ConfigError("training.image_base_ratio must lie in (0, 1)")

        for name in ("peak_lr", "encoder_lr", "mask_temperature"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"training.{name} must be positive")

        if self.weight_decay < 0:
            raise ConfigError("training.weight_decay must not be negative")

        for name in ("epochs", "batch_size", "log_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"training.{name} must be positive")

        if self.max_steps < 0:
            raise ConfigError("training.max_steps must not be negative")

        if self.checkpoint_every < 0:
            raise ConfigError("training.checkpoint_every must not be negative")

        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("training.warmup_fraction must lie in [0, 1)")

        if self.masking_strategy not in MASKING_STRATEGIES:
            raise ConfigError(
                "training.masking_strategy must be one of "
                f"{', '.join(MASKING_STRATEGIES)}"
            )

        if self.report_style not in REPORT_STYLES:
            raise ConfigError(
                f"training.report_style must be one of {', '.join(REPORT_STYLES)}"
            )

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def total_steps(self, n_samples: int) -> int:
        """Get the number of optimizer steps of a run.

        :param n_samples: The number of training samples.
        :return: max_steps when set, otherwise epochs times batches per epoch.

        """
        if self.max_steps:
            return self.max_steps

        return self.epochs * math.ceil(n_samples / self.batch_size)
