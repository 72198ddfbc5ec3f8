"""Padded mini-batches of paired samples."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

# Third Party
import numpy as np
import torch

# dmlm
from dmlm.datasets.synthetic import PairedSample
from dmlm.errors import ContractViolationError, DegenerateInputError
from dmlm.reports.tokenize import PAD_ID

# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class Batch:
    """Stacked tensors for a group of samples.

    :param samples: The samples, in batch order.
    :param token_ids: Token ids padded with the pad id, shape (B, L).
    :param padding_mask: True at padded positions, shape (B, L).
    :param patches: Image patches, shape (B, P, patch_dim).
    :param labels: Class ids, shape (B,).

    """

    samples: Tuple[PairedSample, ...]
    token_ids: torch.Tensor
    padding_mask: torch.Tensor
    patches: torch.Tensor
    labels: torch.Tensor

    def __len__(self) -> int:
        return len(self.samples)


# =============================================================================
# FUNCTIONS
# =============================================================================


def batch_iter(
    dataset: Sequence[PairedSample],
    batch_size: int,
    seed: int,
    shuffle: bool = True,
    epoch: int = 0,
) -> Iterator[Batch]:
    """Iterate over a dataset in batches.

    The final partial batch is kept.

    :param dataset: The samples.
    :param batch_size: The batch size.
    :param seed: The shuffle seed.
    :param shuffle: Whether to shuffle the sample order.
    :param epoch: The epoch number, mixed into the shuffle seed.
    :return: The batches.

    """
    if batch_size < 1:
        raise ContractViolationError("batch_size must be at least 1")

    if not len(dataset):
        raise DegenerateInputError("Cannot batch an empty dataset")

    order = np.arange(len(dataset))

    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(order)

    for start in range(0, len(order), batch_size):
        indices = order[start : start + batch_size]

        yield collate([dataset[int(index)] for index in indices])


def collate(samples: Sequence[PairedSample]) -> Batch:
    """Stack samples into a batch, padding text to the longest sequence.

    :param samples: The samples.
    :return: The batch.

    """
    if not samples:
        raise DegenerateInputError("Cannot collate zero samples")

    shapes = {sample.image.patches.shape for sample in samples}

    if len(shapes) != 1:
        raise ContractViolationError(
            f"Images in a batch must share a shape, got {sorted(shapes)}"
        )

    length = max(len(sample.text) for sample in samples)

    token_ids = np.full((len(samples), length), PAD_ID, dtype=np.int64)
    padding_mask = np.ones((len(samples), length), dtype=bool)

    for row, sample in enumerate(samples):
        token_ids[row, : len(sample.text)] = sample.text.token_ids
        padding_mask[row, : len(sample.text)] = False

    return Batch(
        samples=tuple(samples),
        token_ids=torch.from_numpy(token_ids),
        padding_mask=torch.from_numpy(padding_mask),
        patches=torch.from_numpy(
            np.stack([sample.image.patches for sample in samples])
        ),
        labels=torch.tensor([sample.label for sample in samples], dtype=torch.int64),
    )
