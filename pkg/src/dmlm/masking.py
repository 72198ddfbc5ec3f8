"""Mask plans for the text and image inputs of one sample.

Text positions are masked uniformly at a fixed ratio. Image patches are
masked with an adaptive ratio and preferentially where the patch means match
the report's appearance section.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

# Third Party
import numpy as np
from scipy import special

# dmlm
from dmlm.encoders import TextInput
from dmlm.errors import ContractViolationError, DegenerateInputError
from dmlm.prob_core import GaussianSequence
from dmlm.utils import round_half_up

# =============================================================================
# GLOBALS
# =============================================================================

MASKING_STRATEGIES = ("appearance", "random", "none")

MIN_IMAGE_RATIO = 0.1
MAX_IMAGE_RATIO = 0.6
DEFAULT_TEMPERATURE = 0.1

Seed = Union[int, Sequence[int]]


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class MaskPlan:
    """The positions hidden from the student for one sample.

    :param text_indices: Sorted token positions.
    :param image_indices: Sorted patch positions.
    :param image_ratio_used: The image masking ratio that produced image_indices.
    :param saliency_fallback: Whether saliency fell back to uniform.

    """

    text_indices: Tuple[int, ...] = ()
    image_indices: Tuple[int, ...] = ()
    image_ratio_used: float = 0.0
    saliency_fallback: bool = False

    def __post_init__(self) -> None:
        for name in ("text_indices", "image_indices"):
            values = tuple(sorted(int(value) for value in getattr(self, name)))

            if len(set(values)) != len(values):
                raise ContractViolationError(f"{name} has duplicate positions")

            object.__setattr__(self, name, values)

        if not 0.0 <= self.image_ratio_used <= 1.0:
            raise ContractViolationError("image_ratio_used must lie in [0, 1]")

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        """Whether neither modality has masked positions."""
        return not self.text_indices and not self.image_indices


class Saliency(NamedTuple):
    """Per-patch saliency and whether it fell back to uniform."""

    values: np.ndarray
    fallback: bool


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _child_seed(rng_seed: Seed, index: int) -> np.random.SeedSequence:
    """Derive an independent seed for one part of a plan.

    :param rng_seed: The plan seed.
    :param index: The part index.
    :return: The derived seed sequence.

    """
    entropy: List[int] = [rng_seed] if isinstance(rng_seed, int) else list(rng_seed)

    return np.random.SeedSequence(entropy + [index])


def _normalize_rows(values: np.ndarray) -> np.ndarray:
    """Scale rows to unit length, leaving zero rows at zero.

    :param values: The matrix to normalize.
    :return: The normalized matrix.

    """
    norms = np.linalg.norm(values, axis=1, keepdims=True)

    return np.divide(values, norms, out=np.zeros_like(values), where=norms > 0)


# =============================================================================
# FUNCTIONS
# =============================================================================


def adaptive_image_ratio(saliency: np.ndarray, base_ratio: float) -> float:
    """Compute the image masking ratio from patch saliency.

    The ratio grows with the mean of the top quartile of saliencies and is
    clipped to [0.1, 0.6].

    >>> adaptive_image_ratio(np.ones(100), 0.3)
    0.6

    :param saliency: Per-patch saliency.
    :param base_ratio: The ratio for zero saliency.
    :return: The effective ratio.

    """
    ranked = np.sort(np.asarray(saliency, dtype=np.float64))[::-1]
    top = ranked[: math.ceil(len(saliency) / 4)]

    ratio = base_ratio * (1.0 + float(top.mean()))

    return float(np.clip(ratio, MIN_IMAGE_RATIO, MAX_IMAGE_RATIO))


def appearance_saliency(
    image_seq: GaussianSequence, appearance_seq: Optional[GaussianSequence]
) -> Saliency:
    """Score each patch by its best cosine match against the appearance tokens.

    :param image_seq: The image patch distributions.
    :param appearance_seq: The distributions of the appearance span, or None when
        it is empty.
    :return: Saliency values in [-1, 1], or zeros with the fallback flag set.

    """
    if appearance_seq is None or len(appearance_seq) == 0:
        return Saliency(np.zeros(len(image_seq)), True)

    if appearance_seq.dim != image_seq.dim:
        raise ContractViolationError(
            f"Dimension mismatch: {image_seq.dim} vs {appearance_seq.dim}"
        )

    patch_means = image_seq.mu.detach().cpu().double().numpy()
    token_means = appearance_seq.mu.detach().cpu().double().numpy()

    patch_means = _normalize_rows(patch_means)
    token_means = _normalize_rows(token_means)

    similarity = patch_means @ token_means.T

    return Saliency(np.clip(similarity.max(axis=1), -1.0, 1.0), False)


def mask_count(ratio: float, n: int) -> int:
    """Get the number of positions to mask.

    Half counts round up, and at least one position is masked when any exist.

    >>> [mask_count(0.3, n) for n in (1, 5, 10)]
    [1, 2, 3]

    :param ratio: The masking ratio.
    :param n: The number of maskable positions.
    :return: The number to mask.

    """
    if n <= 0:
        return 0

    return min(n, max(1, round_half_up(ratio * n)))


def plan_image_mask(
    saliency: np.ndarray,
    base_ratio: float,
    rng_seed: Seed,
    temperature: float = DEFAULT_TEMPERATURE,
) -> MaskPlan:
    """Sample patches to mask, preferring salient ones.

    :param saliency: Per-patch saliency.
    :param base_ratio: The masking ratio for zero saliency.
    :param rng_seed: The sampling seed.
    :param temperature: The softmax temperature of the selection probabilities.
    :return: A plan with only image indices.

    """
    saliency = np.asarray(saliency, dtype=np.float64)

    if saliency.ndim != 1 or saliency.size == 0:
        raise ContractViolationError("saliency must be a non-empty vector")

    if not 0.0 < base_ratio < 1.0:
        raise ContractViolationError(f"base_ratio must lie in (0, 1), got {base_ratio}")

    if temperature <= 0:
        raise ContractViolationError("temperature must be positive")

    ratio = adaptive_image_ratio(saliency, base_ratio)
    count = mask_count(ratio, saliency.size)

    probabilities = special.softmax(saliency / temperature)

    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(saliency.size, size=count, replace=False, p=probabilities)

    return MaskPlan(image_indices=tuple(chosen), image_ratio_used=ratio)


def plan_sample_mask(
    text: TextInput,
    n_patches: int,
    text_ratio: float,
    image_base_ratio: float,
    strategy: str,
    rng_seed: Seed,
    saliency: Optional[Saliency] = None,
    temperature: float = DEFAULT_TEMPERATURE,
) -> MaskPlan:
    """Build the combined text and image plan for one sample.

    :param text: The tokenized report.
    :param n_patches: The number of image patches.
    :param text_ratio: The text masking ratio.
    :param image_base_ratio: The base image masking ratio.
    :param strategy: One of "appearance", "random" or "none".
    :param rng_seed: The sampling seed.
    :param saliency: Patch saliency, required by the appearance strategy.
    :param temperature: The image selection temperature.
    :return: The combined plan.

    """
    if strategy not in MASKING_STRATEGIES:
        raise ContractViolationError(f"Unknown masking strategy: {strategy}")

    text_plan = plan_text_mask(text, text_ratio, _child_seed(rng_seed, 0))

    if strategy == "none":
        return text_plan

    fallback = False

    if strategy == "appearance":
        if saliency is None:
            raise ContractViolationError("The appearance strategy needs patch saliency")

        values, fallback = saliency

        if len(values) != n_patches:
            raise ContractViolationError(
                f"Expected saliency for {n_patches} patches, got {len(values)}"
            )

    else:
        values = np.zeros(n_patches)

    image_plan = plan_image_mask(
        values, image_base_ratio, _child_seed(rng_seed, 1), temperature
    )

    return MaskPlan(
        text_indices=text_plan.text_indices,
        image_indices=image_plan.image_indices,
        image_ratio_used=image_plan.image_ratio_used,
        saliency_fallback=fallback,
    )


def plan_text_mask(text: TextInput, ratio: float, rng_seed: Seed) -> MaskPlan:
    """Sample token positions to mask, uniformly over non-special tokens.

    :param text: The tokenized report.
    :param ratio: The masking ratio, in (0, 1].
    :param rng_seed: The sampling seed.
    :return: A plan with only text indices.

    """
    if not 0.0 < ratio <= 1.0:
        raise ContractViolationError(f"ratio must lie in (0, 1], got {ratio}")

    maskable = text.maskable_positions()

    if maskable.size == 0:
        raise DegenerateInputError("The text has no maskable tokens")

    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(maskable, size=mask_count(ratio, maskable.size), replace=False)

    return MaskPlan(text_indices=tuple(chosen))

