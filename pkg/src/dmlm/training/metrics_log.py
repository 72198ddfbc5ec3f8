"""Line-delimited JSON metrics written once per training step."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import json
import pathlib
from types import TracebackType
from typing import IO, Any, Dict, List, Optional, Type

# dmlm
from dmlm.training.losses import LossBreakdown
from dmlm.utils import atomic_write_text, canonical_json

# =============================================================================
# CLASSES
# =============================================================================


class MetricsLog:
    """Write {step, lr, dmlm_text, dmlm_image, align, total} records.

    Use as a context manager; records are flushed as they are written.

    :param path: The log file.
    :param append: Whether to append to an existing log, as when resuming.

    """

    def __init__(self, path: pathlib.Path, append: bool = False) -> None:
        self._path = path
        self._append = append
        self._handle: Optional[IO[str]] = None

    def __enter__(self) -> MetricsLog:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self._path.open("a" if self._append else "w", encoding="utf-8")

        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType],
    ) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def path(self) -> pathlib.Path:
        """The log file."""
        return self._path

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def write(self, step: int, lr: float, breakdown: LossBreakdown) -> None:
        """Write the record of one step.

        :param step: The zero-based step.
        :param lr: The head learning rate used for the step.
        :param breakdown: The step's losses.
        :return:

        """
        if self._handle is None:
            raise RuntimeError("MetricsLog must be used as a context manager")

        record = {
            "step": step,
            "lr": lr,
            "dmlm_text": breakdown.dmlm_text,
            "dmlm_image": breakdown.dmlm_image,
            "align": breakdown.align,
            "total": breakdown.total,
        }

        self._handle.write(canonical_json(record) + "\n")
        self._handle.flush()


# =============================================================================
# FUNCTIONS
# =============================================================================


def read_metrics(path: pathlib.Path) -> List[Dict[str, Any]]:
    """Read a metrics log.

    :param path: The log file.
    :return: The records in order.

    """
    with path.open("r", encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def truncate_metrics(path: pathlib.Path, step: int) -> None:
    """Drop the records of a log from a step onward, as when resuming.

    :param path: The log file.
    :param step: The first step to drop.
    :return:

    """
    if not path.exists():
        return

    with path.open("r", encoding="utf-8") as handle:
        kept = [
            line
            for line in handle
            if line.strip() and json.loads(line)["step"] < step
        ]

    atomic_write_text(path, "".join(kept))
