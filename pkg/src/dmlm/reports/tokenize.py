"""Turn reports into token id sequences with section spans."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import re
from typing import TYPE_CHECKING, Dict, List, Sequence, Tuple

# Third Party
import numpy as np

# dmlm
from dmlm.encoders import TextInput
from dmlm.errors import ContractViolationError, ReportLengthError
from dmlm.reports.report import SECTION_NAMES, StructuredReport

# Imports for type checking.
if TYPE_CHECKING:
    from dmlm.datasets.vocab import Vocabulary

_logger = logging.getLogger(__name__)

# =============================================================================
# GLOBALS
# =============================================================================

PAD_ID = 0
UNK_ID = 1
BOS_ID = 2
EOS_ID = 3

_WORD_PATTERN = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _assemble(
    vocab: Vocabulary, sections: Dict[str, List[str]]
) -> TextInput:
    """Build a TextInput from per-section words, adding the begin and end tokens.

    :param vocab: The vocabulary.
    :param sections: Section name to its words.
    :return: The tokenized input.

    """
    token_ids = [BOS_ID]
    spans: Dict[str, Tuple[int, int]] = {}

    for name in SECTION_NAMES:
        start = len(token_ids)
        token_ids.extend(vocab.encode(sections.get(name, [])))
        spans[name] = (start, len(token_ids))

    token_ids.append(EOS_ID)

    special_mask = np.zeros(len(token_ids), dtype=bool)
    special_mask[[0, -1]] = True

    return TextInput(
        token_ids=np.asarray(token_ids, dtype=np.int64),
        section_spans=spans,
        special_mask=special_mask,
    )


def _truncate_tail(
    observations: List[str], verdicts: List[str], available: int
) -> Tuple[List[str], List[str]]:
    """Shorten the observations, then the verdicts, to fit the available length.

    Each keeps at least one word.

    :param observations: The observation words.
    :param verdicts: The verdict words.
    :param available: The number of positions left for both sections.
    :return: The truncated observation and verdict words.

    """
    overflow = len(observations) + len(verdicts) - available

    if overflow <= 0:
        return observations, verdicts

    cut = min(overflow, len(observations) - 1)
    observations = observations[: len(observations) - cut]
    overflow -= cut

    if overflow > 0:
        verdicts = verdicts[: len(verdicts) - overflow]

    return observations, verdicts


# =============================================================================
# FUNCTIONS
# =============================================================================


def split_words(text: str) -> List[str]:
    """Split text into lowercase words and single punctuation marks.

    >>> split_words("Definition: Atelectasis, partial collapse.")
    ['definition', ':', 'atelectasis', ',', 'partial', 'collapse', '.']

    :param text: The text to split.
    :return: The words.

    """
    return _WORD_PATTERN.findall(text.lower())


def report_words(report: StructuredReport) -> List[str]:
    """Get every word of a report, in section order.

    :param report: The report.
    :return: The words.

    """
    return [
        word
        for lines in report.section_texts().values()
        for line in lines
        for word in split_words(line)
    ]


def tokenize_findings(
    findings: Sequence[str], vocab: Vocabulary, max_len: int
) -> TextInput:
    """Tokenize raw findings without any report structure.

    All words land in the observations span; the other spans are empty.

    :param findings: The findings.
    :param vocab: The vocabulary.
    :param max_len: The maximum sequence length, including begin and end tokens.
    :return: The tokenized findings.

    """
    words = [word for finding in findings for word in split_words(finding)]

    if not words:
        raise ContractViolationError("Findings must contain at least one word")

    if max_len < 3:
        raise ReportLengthError(f"max_len {max_len} leaves no room for findings")

    return _assemble(vocab, {"observations": words[: max_len - 2]})


def tokenize_report(
    report: StructuredReport, vocab: Vocabulary, max_len: int
) -> TextInput:
    """Tokenize a structured report.

    Only observations and verdicts are ever truncated.

    :param report: The report.
    :param vocab: The vocabulary.
    :param max_len: The maximum sequence length, including begin and end tokens.
    :return: The tokenized report.

    """
    report.validate()

    sections = {
        name: [word for line in lines for word in split_words(line)]
        for name, lines in report.section_texts().items()
    }

    available = max_len - 2 - len(sections["definition"]) - len(sections["appearance"])

    if available < 2:
        raise ReportLengthError(
            f"The definition and appearance of {report.disease!r} "
            f"do not fit in {max_len} tokens"
        )

    observations, verdicts = _truncate_tail(
        sections["observations"], sections["verdicts"], available
    )

    if len(observations) + len(verdicts) < len(sections["observations"]) + len(
        sections["verdicts"]
    ):
        _logger.debug("Truncated report for %s to %s tokens", report.disease, max_len)

    sections["observations"] = observations
    sections["verdicts"] = verdicts

    return _assemble(vocab, sections)
