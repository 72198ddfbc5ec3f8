"""Exceptions raised by dmlm.

Each exception also derives from the closest builtin so callers that only
know about builtins can still catch them.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
from typing import TYPE_CHECKING

# Imports for type checking.
if TYPE_CHECKING:
    from dmlm.training.losses import LossBreakdown


# =============================================================================
# CLASSES
# =============================================================================


class DMLMError(Exception):
    """Base class for all dmlm errors."""


class ContractViolationError(DMLMError, ValueError):
    """Raised when an operation's pre-condition or a type invariant is violated."""


class DegenerateInputError(DMLMError, ValueError):
    """Raised when an input is well-formed but leaves nothing to compute."""


class ConfigError(DMLMError, ValueError):
    """Raised for invalid or unknown configuration values."""


class ConfigMismatchError(ConfigError):
    """Raised when a stored configuration does not match the expected one."""


class LexiconMissError(DMLMError, KeyError):
    """Raised when a disease is not present in the lexicon."""

    def __str__(self) -> str:
        # KeyError quotes its argument, we want the plain message.
        return str(self.args[0]) if self.args else ""


class ReportParseError(DMLMError, ValueError):
    """Raised when a serialized report cannot be parsed.

    :param message: The error message.
    :param section: The name of the offending section.

    """

    def __init__(self, message: str, section: str) -> None:
        super().__init__(message)
        self.section = section


class ReportLengthError(DMLMError, ValueError):
    """Raised when a report cannot be tokenized within the maximum length."""


class LLMEndpointError(DMLMError, RuntimeError):
    """Raised when the chat-completion endpoint fails or is not configured."""


class CheckpointError(DMLMError, OSError):
    """Raised when a checkpoint file cannot be read."""


class VocabMismatchError(DMLMError, ValueError):
    """Raised when a checkpoint and a corpus were built with different vocabularies."""


class NonFiniteLossError(DMLMError, FloatingPointError):
    """Raised when a training step produces a non-finite loss.

    :param message: The error message.
    :param breakdown: The loss breakdown of the failing step.

    """

    def __init__(self, message: str, breakdown: LossBreakdown) -> None:
        super().__init__(message)
        self.breakdown = breakdown
