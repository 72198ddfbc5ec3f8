"""The four-section structured report and its text serialization.

Serialized form, sections in fixed order::

    Definition: <definition>
    Radiographic characteristics: <appearance>
    Observations:
    Observation: <finding>.
    Verdicts:
    Verdict: <disease> present.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

# dmlm
from dmlm.errors import ContractViolationError, ReportParseError

# =============================================================================
# GLOBALS
# =============================================================================

SECTION_NAMES = ("definition", "appearance", "observations", "verdicts")

DEFINITION_PREFIX = "Definition:"
APPEARANCE_PREFIX = "Radiographic characteristics:"
OBSERVATIONS_HEADER = "Observations:"
VERDICTS_HEADER = "Verdicts:"

_INLINE_HEADERS = {
    "definition": DEFINITION_PREFIX,
    "appearance": APPEARANCE_PREFIX,
}

_BLOCK_HEADERS = {
    "observations": OBSERVATIONS_HEADER,
    "verdicts": VERDICTS_HEADER,
}

_VERDICT_PATTERN = re.compile(r"^Verdict: (?P<disease>.+) (?:present|absent)\.$")


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class StructuredReport:
    """A structured report for a single disease.

    The definition and appearance hold the section text without their prefixes;
    observations and verdicts hold full lines ("Observation: ...", "Verdict: ...").

    """

    disease: str
    definition: str
    appearance: str
    observations: Tuple[str, ...]
    verdicts: Tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "verdicts", tuple(self.verdicts))

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def section_texts(self) -> Dict[str, List[str]]:
        """Get the serialized lines of each section, without block headers.

        :return: Section name to its lines.

        """
        return {
            "definition": [f"{DEFINITION_PREFIX} {self.definition}"],
            "appearance": [f"{APPEARANCE_PREFIX} {self.appearance}"],
            "observations": list(self.observations),
            "verdicts": list(self.verdicts),
        }

    def validate(self) -> None:
        """Check that every section is present and survives a text round trip.

        Values must be a single line under ``str.splitlines`` and carry no
        leading or trailing whitespace, as parsing strips both.

        :return:

        """
        for name in ("definition", "appearance"):
            value = getattr(self, name)

            if not value.strip():
                raise ContractViolationError(f"The {name} section is empty")

            _check_line(name, value)

        for name in ("observations", "verdicts"):
            lines = getattr(self, name)

            if not lines:
                raise ContractViolationError(f"The {name} section is empty")

            for line in lines:
                if not line.strip():
                    raise ContractViolationError(
                        f"The {name} section has an empty line"
                    )

                _check_line(name, line)

                if _match_header(line) is not None:
                    raise ContractViolationError(
                        f"The {name} section has a line which looks like a header: "
                        f"{line!r}"
                    )


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _check_line(name: str, value: str) -> None:
    """Check that a section value is a single unpadded line.

    :param name: The section name.
    :param value: The value or line to check.
    :return:

    """
    if value.splitlines() != [value]:
        raise ContractViolationError(
            f"The {name} section must be a single line: {value!r}"
        )

    if value != value.strip():
        raise ContractViolationError(
            f"The {name} section has leading or trailing whitespace: {value!r}"
        )


def _match_header(line: str) -> Optional[Tuple[str, str]]:
    """Check whether a line is a section header.

    :param line: The line to check.
    :return: The section name and any inline text, or None.

    """
    for name, prefix in _INLINE_HEADERS.items():
        if line.startswith(prefix):
            return name, line[len(prefix) :].strip()

    for name, header in _BLOCK_HEADERS.items():
        if line.strip() == header:
            return name, ""

    return None


def _check_header_order(names: List[str]) -> None:
    """Check that every section header appears once and in order.

    :param names: The section names in document order.
    :return:

    """
    for name in SECTION_NAMES:
        count = names.count(name)

        if not count:
            raise ReportParseError(f"Missing section header for '{name}'", name)

        if count > 1:
            raise ReportParseError(f"Duplicate section header for '{name}'", name)

    for found, expected in zip(names, SECTION_NAMES):
        if found != expected:
            raise ReportParseError(
                f"Section '{found}' is out of order, expected '{expected}'", found
            )


# =============================================================================
# FUNCTIONS
# =============================================================================


def disease_from_verdicts(verdicts: Iterable[str]) -> str:
    """Recover the disease name from the first well-formed verdict line.

    >>> disease_from_verdicts(["Verdict: atelectasis present."])
    'atelectasis'

    :param verdicts: The verdict lines.
    :return: The disease name, or an empty string.

    """
    for line in verdicts:
        result = _VERDICT_PATTERN.match(line)

        if result is not None:
            return result.group("disease")

    return ""


def parse_report(text: str, disease: Optional[str] = None) -> StructuredReport:
    """Parse a serialized report.

    :param text: The serialized report.
    :param disease: Optional disease name. If not passed it is recovered from the
        verdicts.
    :return: The parsed report.

    """
    entries: List[Tuple[str, str, List[str]]] = []

    for line in text.splitlines():
        if not line.strip():
            continue

        header = _match_header(line)

        if header is not None:
            entries.append((header[0], header[1], []))
            continue

        if not entries:
            raise ReportParseError(
                "Text found before the first section header", "definition"
            )

        entries[-1][2].append(line.strip())

    _check_header_order([entry[0] for entry in entries])

    values: Dict[str, object] = {}

    for name, inline, lines in entries:
        if name in _INLINE_HEADERS:
            if lines:
                raise ReportParseError(
                    f"Unexpected extra lines in the '{name}' section", name
                )

            if not inline:
                raise ReportParseError(f"The '{name}' section is empty", name)

            values[name] = inline

        else:
            if not lines:
                raise ReportParseError(f"The '{name}' section is empty", name)

            values[name] = tuple(lines)

    verdicts = values["verdicts"]

    if disease is None:
        disease = disease_from_verdicts(verdicts)  # type: ignore[arg-type]

    return StructuredReport(
        disease=disease,
        definition=values["definition"],  # type: ignore[arg-type]
        appearance=values["appearance"],  # type: ignore[arg-type]
        observations=values["observations"],  # type: ignore[arg-type]
        verdicts=verdicts,  # type: ignore[arg-type]
    )


def serialize_report(report: StructuredReport) -> str:
    """Serialize a report to its fixed-order text form.

    :param report: The report to serialize.
    :return: The serialized text, newline terminated.

    """
    report.validate()

    sections = report.section_texts()

    lines = sections["definition"] + sections["appearance"]
    lines.append(OBSERVATIONS_HEADER)
    lines.extend(sections["observations"])
    lines.append(VERDICTS_HEADER)
    lines.extend(sections["verdicts"])

    return "\n".join(lines) + "\n"
