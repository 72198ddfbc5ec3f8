"""Small from-scratch dual encoders whose heads emit Gaussian sequences.

The text encoder embeds token ids, the image encoder embeds flattened patches;
both run a pre-norm transformer stack and finish with a distribution head
producing one diagonal Gaussian per position.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Tuple

# Third Party
import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

# dmlm
from dmlm.errors import ConfigError, ContractViolationError
from dmlm.prob_core import GaussianSequence
from dmlm.reports.report import SECTION_NAMES
from dmlm.schema import ConfigSection

# Imports for type checking.
if TYPE_CHECKING:
    from dmlm.masking import MaskPlan


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class EncoderConfig(ConfigSection):
    """Encoder architecture settings.

    The defaults are desk scale; the full preset uses d_model=768.

    """

    section_name = "encoder"

    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    vocab_size: int = 512
    max_len: int = 128
    patch_dim: int = 16
    max_patches: int = 64
    mlp_ratio: int = 4

    def validate(self) -> None:
        for name in (
            "d_model",
            "n_layers",
            "n_heads",
            "vocab_size",
            "max_len",
            "patch_dim",
            "max_patches",
            "mlp_ratio",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"encoder.{name} must be positive")

        if self.d_model % self.n_heads:
            raise ConfigError(
                f"encoder.d_model ({self.d_model}) must be divisible by "
                f"encoder.n_heads ({self.n_heads})"
            )


@dataclass(frozen=True)
class TextInput:
    """A tokenized report.

    :param token_ids: Token ids, shape (L,).
    :param section_spans: Half-open [start, end) ranges per report section.
    :param special_mask: True at begin/end (and padding) positions.

    """

    token_ids: np.ndarray
    section_spans: Dict[str, Tuple[int, int]]
    special_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        token_ids = np.asarray(self.token_ids, dtype=np.int64)

        if token_ids.ndim != 1 or token_ids.size < 1:
            raise ContractViolationError("token_ids must be a non-empty 1-D sequence")

        if (token_ids < 0).any():
            raise ContractViolationError("token_ids must be non-negative")

        special_mask = (
            np.zeros(token_ids.shape, dtype=bool)
            if self.special_mask is None
            else np.asarray(self.special_mask, dtype=bool)
        )

        if special_mask.shape != token_ids.shape:
            raise ContractViolationError("special_mask must match token_ids")

        spans = {
            name: (int(span[0]), int(span[1]))
            for name, span in self.section_spans.items()
        }

        unknown = set(spans) - set(SECTION_NAMES)

        if unknown:
            raise ContractViolationError(f"Unknown section(s): {sorted(unknown)}")

        previous_end = 0

        for name in SECTION_NAMES:
            if name not in spans:
                continue

            start, end = spans[name]

            if not 0 <= start <= end <= token_ids.size:
                raise ContractViolationError(
                    f"Span for {name} is out of range: {(start, end)}"
                )

            if start < previous_end:
                raise ContractViolationError(
                    f"Span for {name} overlaps or is out of order"
                )

            previous_end = end

        object.__setattr__(self, "token_ids", token_ids)
        object.__setattr__(self, "special_mask", special_mask)
        object.__setattr__(self, "section_spans", spans)

    def __len__(self) -> int:
        return int(self.token_ids.size)

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def maskable_positions(self) -> np.ndarray:
        """Get the positions which are not special tokens."""
        return np.flatnonzero(~self.special_mask)

    def span_positions(self, section: str) -> np.ndarray:
        """Get the positions covered by a section.

        :param section: The section name.
        :return: The positions, possibly empty.

        """
        start, end = self.section_spans.get(section, (0, 0))

        return np.arange(start, end)


@dataclass(frozen=True)
class ImageInput:
    """An image cut into a grid of flattened patches.

    :param patches: Patch values in [0, 1], shape (P, patch_dim).
    :param grid_h: The number of patch rows.
    :param grid_w: The number of patch columns.

    """

    patches: np.ndarray
    grid_h: int
    grid_w: int

    def __post_init__(self) -> None:
        patches = np.asarray(self.patches, dtype=np.float32)

        if patches.ndim != 2:
            raise ContractViolationError("patches must have shape (P, patch_dim)")

        if self.grid_h < 1 or self.grid_w < 1:
            raise ContractViolationError("Grid sizes must be positive")

        if patches.shape[0] != self.grid_h * self.grid_w:
            raise ContractViolationError(
                f"Expected {self.grid_h * self.grid_w} patches, got {patches.shape[0]}"
            )

        if not np.isfinite(patches).all():
            raise ContractViolationError("patches has non-finite entries")

        object.__setattr__(self, "patches", patches)

    def __len__(self) -> int:
        return int(self.patches.shape[0])


class SelfAttention(nn.Module):
    """Multi-head self attention with an optional key padding mask.

    :param d_model: The feature width.
    :param n_heads: The number of heads.

    """

    def __init__(self, d_model: int, n_heads: int) -> None:
        super().__init__()

        self.n_heads = n_heads
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.out = nn.Linear(d_model, d_model)

    def forward(
        self, x: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        batch, length, width = x.shape
        head_dim = width // self.n_heads

        query, key, value = (
            part.reshape(batch, length, self.n_heads, head_dim).transpose(1, 2)
            for part in self.qkv(x).chunk(3, dim=-1)
        )

        scores = query @ key.transpose(-2, -1) / math.sqrt(head_dim)

        if padding_mask is not None:
            scores = scores.masked_fill(padding_mask[:, None, None, :], float("-inf"))

        weights = F.softmax(scores, dim=-1)

        attended = (weights @ value).transpose(1, 2).reshape(batch, length, width)

        return self.out(attended)


class TransformerBlock(nn.Module):
    """A pre-norm transformer encoder block.

    :param d_model: The feature width.
    :param n_heads: The number of attention heads.
    :param mlp_ratio: The hidden width multiplier of the feed-forward layer.

    """

    def __init__(self, d_model: int, n_heads: int, mlp_ratio: int) -> None:
        super().__init__()

        self.attn_norm = nn.LayerNorm(d_model)
        self.attn = SelfAttention(d_model, n_heads)
        self.mlp_norm = nn.LayerNorm(d_model)
        self.mlp = nn.Sequential(
            nn.Linear(d_model, mlp_ratio * d_model),
            nn.GELU(),
            nn.Linear(mlp_ratio * d_model, d_model),
        )

    def forward(
        self, x: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        x = x + self.attn(self.attn_norm(x), padding_mask)

        return x + self.mlp(self.mlp_norm(x))


class DistributionHead(nn.Module):
    """Project features (and an optional cross-modal context) to a Gaussian sequence.

    The context is the other modality's pooled mean; it is concatenated to every
    position's features. A missing context is treated as zeros.

    :param d_model: The feature width.

    """

    def __init__(self, d_model: int) -> None:
        super().__init__()

        self.d_model = d_model
        self.mu = nn.Linear(2 * d_model, d_model)
        self.log_var = nn.Linear(2 * d_model, d_model)

        nn.init.zeros_(self.mu.bias)

        # Initial variances are close to one.
        nn.init.normal_(self.log_var.weight, std=1e-3)
        nn.init.zeros_(self.log_var.bias)

    def forward(
        self, features: torch.Tensor, context: Optional[torch.Tensor] = None
    ) -> GaussianSequence:
        if context is None:
            context = features.new_zeros(features.shape[:-2] + (self.d_model,))

        context = context.unsqueeze(-2).expand(features.shape)

        joined = torch.cat([features, context], dim=-1)

        return GaussianSequence(self.mu(joined), self.log_var(joined))


class _ModalityEncoder(nn.Module):
    """Shared transformer stack and head of the two modality encoders.

    :param config: The encoder configuration.
    :param max_positions: The number of learned position embeddings.

    """

    def __init__(self, config: EncoderConfig, max_positions: int) -> None:
        super().__init__()

        self.position_embedding = nn.Parameter(
            torch.zeros(max_positions, config.d_model)
        )
        self.mask_embedding = nn.Parameter(torch.zeros(config.d_model))
        self.blocks = nn.ModuleList(
            [
                TransformerBlock(config.d_model, config.n_heads, config.mlp_ratio)
                for _ in range(config.n_layers)
            ]
        )
        self.norm = nn.LayerNorm(config.d_model)
        self.head = DistributionHead(config.d_model)

        nn.init.normal_(self.position_embedding, std=0.02)
        nn.init.normal_(self.mask_embedding, std=0.02)

    # -------------------------------------------------------------------------
    # NON-PUBLIC METHODS
    # -------------------------------------------------------------------------

    def _encode(
        self,
        embeddings: torch.Tensor,
        masked: Optional[torch.Tensor],
        padding_mask: Optional[torch.Tensor],
        context: Optional[torch.Tensor],
    ) -> GaussianSequence:
        """Run the shared part of the encoder.

        :param embeddings: Input embeddings, shape (B, L, d_model).
        :param masked: Optional boolean mask (B, L) of positions to hide.
        :param padding_mask: Optional boolean mask (B, L), True at padding.
        :param context: Optional cross-modal context, shape (B, d_model).
        :return: The output Gaussian sequence.

        """
        length = embeddings.shape[1]

        if length > self.position_embedding.shape[0]:
            raise ContractViolationError(
                f"Sequence length {length} exceeds "
                f"{self.position_embedding.shape[0]} positions"
            )

        if masked is not None:
            embeddings = torch.where(
                masked.unsqueeze(-1),
                self.mask_embedding.expand_as(embeddings),
                embeddings,
            )

        x = embeddings + self.position_embedding[:length]

        for block in self.blocks:
            x = block(x, padding_mask)

        return self.head(self.norm(x), context)


class TextEncoder(_ModalityEncoder):
    """Token-level text encoder.

    :param config: The encoder configuration.

    """

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__(config, config.max_len)

        self.token_embedding = nn.Embedding(config.vocab_size, config.d_model)

        nn.init.normal_(self.token_embedding.weight, std=0.02)

    def forward(
        self,
        token_ids: torch.Tensor,
        padding_mask: Optional[torch.Tensor] = None,
        masked: Optional[torch.Tensor] = None,
        context: Optional[torch.Tensor] = None,
    ) -> GaussianSequence:
        return self._encode(
            self.token_embedding(token_ids), masked, padding_mask, context
        )


class ImageEncoder(_ModalityEncoder):
    """Patch-level image encoder.

    :param config: The encoder configuration.

    """

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__(config, config.max_patches)

        self.patch_embedding = nn.Linear(config.patch_dim, config.d_model)

    def forward(
        self,
        patches: torch.Tensor,
        masked: Optional[torch.Tensor] = None,
        context: Optional[torch.Tensor] = None,
    ) -> GaussianSequence:
        return self._encode(self.patch_embedding(patches), masked, None, context)


class DualEncoder(nn.Module):
    """The text and image encoders trained together.

    :param config: The encoder configuration.

    """

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()

        self.config = config
        self.text = TextEncoder(config)
        self.image = ImageEncoder(config)

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def dtype(self) -> torch.dtype:
        """The parameter dtype."""
        return self.text.position_embedding.dtype

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def backbone_parameters(self) -> Iterator[nn.Parameter]:
        """Get the parameters of everything but the distribution heads."""
        for name, param in self.named_parameters():
            if ".head." not in name:
                yield param

    def head_parameters(self) -> Iterator[nn.Parameter]:
        """Get the parameters of the distribution heads."""
        for name, param in self.named_parameters():
            if ".head." in name:
                yield param


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _positions_to_mask(
    positions: List[int], length: int, forbidden: Optional[np.ndarray]
) -> np.ndarray:
    """Convert mask positions to a boolean vector, validating them.

    :param positions: The positions to mask.
    :param length: The sequence length.
    :param forbidden: Optional boolean vector of positions which may not be masked.
    :return: The boolean mask.

    """
    result = np.zeros(length, dtype=bool)

    for position in positions:
        if not 0 <= position < length:
            raise ContractViolationError(
                f"Mask index {position} is out of range [0, {length})"
            )

        if forbidden is not None and forbidden[position]:
            raise ContractViolationError(f"Mask index {position} is a special token")

        result[position] = True

    return result


# =============================================================================
# FUNCTIONS
# =============================================================================


def distribution_head(
    head: DistributionHead, features: torch.Tensor
) -> GaussianSequence:
    """Apply a distribution head to a feature matrix.

    :param head: The head to apply.
    :param features: The features, shape (L, d_model).
    :return: The Gaussian sequence of length L.

    """
    if not bool(torch.isfinite(features).all()):
        raise ContractViolationError("features has non-finite entries")

    return head(features)


def encode_image(
    model: DualEncoder,
    image: ImageInput,
    mask: Optional[MaskPlan] = None,
    context: Optional[torch.Tensor] = None,
) -> GaussianSequence:
    """Encode a single image.

    :param model: The dual encoder.
    :param image: The image.
    :param mask: Optional mask plan; its image indices are hidden.
    :param context: Optional cross-modal context vector, shape (d_model,).
    :return: One distribution per patch.

    """
    if image.patches.shape[1] != model.config.patch_dim:
        raise ContractViolationError(
            f"Expected patch_dim {model.config.patch_dim}, got {image.patches.shape[1]}"
        )

    masked = None

    if mask is not None:
        masked = torch.from_numpy(
            _positions_to_mask(mask.image_indices, len(image), forbidden=None)
        ).unsqueeze(0)

    patches = torch.from_numpy(image.patches).to(model.dtype).unsqueeze(0)

    result = model.image(
        patches,
        masked=masked,
        context=None if context is None else context.unsqueeze(0),
    )

    return GaussianSequence(result.mu[0], result.log_var[0])


def encode_text(
    model: DualEncoder,
    text: TextInput,
    mask: Optional[MaskPlan] = None,
    context: Optional[torch.Tensor] = None,
) -> GaussianSequence:
    """Encode a single tokenized report.

    :param model: The dual encoder.
    :param text: The tokenized report.
    :param mask: Optional mask plan; its text indices are hidden.
    :param context: Optional cross-modal context vector, shape (d_model,).
    :return: One distribution per token.

    """
    if int(text.token_ids.max()) >= model.config.vocab_size:
        raise ContractViolationError("token_ids exceed the vocabulary size")

    masked = None

    if mask is not None:
        masked = torch.from_numpy(
            _positions_to_mask(
                mask.text_indices, len(text), forbidden=text.special_mask
            )
        ).unsqueeze(0)

    token_ids = torch.from_numpy(text.token_ids).unsqueeze(0)

    result = model.text(
        token_ids,
        masked=masked,
        context=None if context is None else context.unsqueeze(0),
    )

    return GaussianSequence(result.mu[0], result.log_var[0])

