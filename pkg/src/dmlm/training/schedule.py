"""Learning rate schedule: linear warmup, then cosine decay to zero."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
from dataclasses import dataclass

# dmlm
from dmlm.errors import ContractViolationError

# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class LRSchedule:
    """Multiplier applied to the base learning rates at each step.

    The factor rises linearly from 0 at step 0 to 1 at warmup_steps, then
    follows a half cosine down to 0 at the final step (total_steps - 1).

    :param total_steps: The number of optimizer steps.
    :param warmup_steps: The number of warmup steps.

    """

    total_steps: int
    warmup_steps: int

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ContractViolationError("total_steps must be at least 1")

        if not 0 <= self.warmup_steps < self.total_steps:
            raise ContractViolationError("warmup_steps must lie in [0, total_steps)")

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_fraction(cls, total_steps: int, warmup_fraction: float) -> LRSchedule:
        """Build a schedule whose warmup covers a fraction of the run.

        :param total_steps: The number of optimizer steps.
        :param warmup_fraction: The warmup share of the run.
        :return: The schedule.

        """
        warmup = min(int(round(warmup_fraction * total_steps)), total_steps - 1)

        return cls(total_steps, warmup)

    def factor(self, step: int) -> float:
        """Get the learning rate multiplier.

        >>> schedule = LRSchedule(11, 5)
        >>> schedule.factor(0), schedule.factor(5), schedule.factor(10)
        (0.0, 1.0, 0.0)

        :param step: The zero-based step.
        :return: The multiplier in [0, 1].

        """
        if step < 0:
            raise ContractViolationError("step must not be negative")

        if step < self.warmup_steps:
            return step / self.warmup_steps

        decay_steps = self.total_steps - 1 - self.warmup_steps

        if decay_steps <= 0:
            return 1.0

        progress = min(1.0, (step - self.warmup_steps) / decay_steps)

        return 0.5 * (1.0 + math.cos(math.pi * progress))
