"""Line-delimited report corpus files with {id, disease, report_text} records."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import json
import pathlib
from dataclasses import asdict, dataclass
from typing import Iterable, List

# dmlm
from dmlm.errors import ContractViolationError
from dmlm.reports.report import StructuredReport, parse_report
from dmlm.utils import atomic_write_text

# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class ReportRecord:
    """A single corpus record."""

    id: str
    disease: str
    report_text: str

    def report(self) -> StructuredReport:
        """Parse the stored report text.

        :return: The parsed report.

        """
        return parse_report(self.report_text, disease=self.disease)


# =============================================================================
# FUNCTIONS
# =============================================================================


def read_report_corpus(path: pathlib.Path) -> List[ReportRecord]:
    """Read a report corpus file.

    :param path: The file to read.
    :return: The records in file order.

    """
    records = []

    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue

            try:
                data = json.loads(line)
                records.append(
                    ReportRecord(
                        id=str(data["id"]),
                        disease=data["disease"],
                        report_text=data["report_text"],
                    )
                )

            except (ValueError, KeyError, TypeError) as inst:
                raise ContractViolationError(
                    f"Invalid corpus record on line {line_number} of {path}"
                ) from inst

    return records


def write_report_corpus(path: pathlib.Path, records: Iterable[ReportRecord]) -> None:
    """Write a report corpus file, one JSON record per line.

    :param path: The file to write.
    :param records: The records to write.
    :return:

    """
    lines = [
        json.dumps(asdict(record), ensure_ascii=False, sort_keys=True)
        for record in records
    ]

    atomic_write_text(path, "".join(f"{line}\n" for line in lines))
