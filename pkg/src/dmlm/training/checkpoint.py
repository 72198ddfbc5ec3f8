"""Checkpoint files.

A checkpoint is a single ``torch.save`` archive holding a mapping::

    {"state_dict": {...}, "config": {...}, "step": int, "metadata": {...}}

``config`` holds the configuration sections the model was built and trained
with, ``metadata`` holds extra JSON compatible values such as the vocabulary
digest. Files are read back with ``weights_only=True`` so only tensors and
plain containers are ever unpickled. Optimizer state is not stored.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import io
import pathlib
import pickle
import zipfile
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

# Third Party
import torch
from torch import nn

# dmlm
from dmlm.errors import CheckpointError, ConfigMismatchError
from dmlm.utils import atomic_write_bytes

# =============================================================================
# GLOBALS
# =============================================================================

_REQUIRED_KEYS = ("state_dict", "config", "step")


# =============================================================================
# CLASSES
# =============================================================================


@dataclass
class Checkpoint:
    """The contents of a checkpoint file."""

    state: Dict[str, torch.Tensor]
    config: Dict[str, Any]
    step: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def restore(self, model: nn.Module) -> None:
        """Copy the stored parameters into a model.

        :param model: The model, built with the stored configuration.
        :return:

        """
        model.load_state_dict(self.state, strict=True)


# =============================================================================
# FUNCTIONS
# =============================================================================


def check_config(stored: Mapping[str, Any], expected: Mapping[str, Any]) -> None:
    """Compare the expected configuration sections with the stored ones.

    :param stored: The stored configuration.
    :param expected: The expected configuration sections.
    :return:

    """
    differences: List[str] = []

    for section, values in expected.items():
        stored_values = stored.get(section, {})

        for key in sorted(set(values) | set(stored_values)):
            if values.get(key) != stored_values.get(key):
                differences.append(
                    f"{section}.{key}: checkpoint has {stored_values.get(key)!r}, "
                    f"expected {values.get(key)!r}"
                )

    if differences:
        raise ConfigMismatchError(
            "Checkpoint configuration mismatch: " + "; ".join(differences)
        )


def load_checkpoint(
    path: pathlib.Path, expected_config: Optional[Mapping[str, Any]] = None
) -> Checkpoint:
    """Read a checkpoint file.

    :param path: The file to read.
    :param expected_config: Optional configuration sections the stored ones must equal.
    :return: The checkpoint.

    """
    if not path.is_file():
        raise FileNotFoundError(f"Checkpoint not found: {path}")

    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)

    except (
        pickle.UnpicklingError,
        zipfile.BadZipFile,
        EOFError,
        RuntimeError,
        ValueError,
    ) as inst:
        raise CheckpointError(f"{path} is not a readable checkpoint: {inst}") from inst

    if not isinstance(payload, dict):
        raise CheckpointError(f"{path} does not hold a checkpoint mapping")

    missing = [key for key in _REQUIRED_KEYS if key not in payload]

    if missing:
        raise CheckpointError(f"{path} is missing {', '.join(missing)}")

    if expected_config is not None:
        check_config(payload["config"], expected_config)

    return Checkpoint(
        state=dict(payload["state_dict"]),
        config=payload["config"],
        step=int(payload["step"]),
        metadata=payload.get("metadata", {}),
    )


def save_checkpoint(
    path: pathlib.Path,
    model: nn.Module,
    config: Mapping[str, Any],
    step: int,
    metadata: Optional[Mapping[str, Any]] = None,
) -> None:
    """Write a checkpoint file.

    :param path: The file to write.
    :param model: The model whose parameters and buffers are stored.
    :param config: The configuration sections to embed.
    :param step: The number of completed optimizer steps.
    :param metadata: Optional extra JSON compatible metadata.
    :return:

    """
    state = {
        name: tensor.detach().cpu().clone()
        for name, tensor in model.state_dict().items()
    }

    buffer = io.BytesIO()

    torch.save(
        {
            "state_dict": state,
            "config": dict(config),
            "step": int(step),
            "metadata": dict(metadata or {}),
        },
        buffer,
    )

    atomic_write_bytes(path, buffer.getvalue())
