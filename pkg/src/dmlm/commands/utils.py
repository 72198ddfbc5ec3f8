"""Command related utilities."""

# Future
from __future__ import annotations

# Standard Library
import pathlib
from typing import TYPE_CHECKING, Iterable, Tuple

# Third Party
import termcolor

# dmlm
from dmlm.reports.lexicon import Lexicon

# Imports for type checking.
if TYPE_CHECKING:
    from dmlm.evaluation.metrics import EvalResult
    from dmlm.reports.backends import ReportConfig


# =============================================================================
# FUNCTIONS
# =============================================================================


def load_lexicon(config: ReportConfig) -> Lexicon:
    """Load the lexicon a report configuration selects.

    :param config: The report configuration.
    :return: The configured lexicon, or the packaged one.

    """
    if config.lexicon_path:
        return Lexicon.load(pathlib.Path(config.lexicon_path))

    return Lexicon.default()


def print_check_table(rows: Iterable[Tuple[str, bool, str]]) -> None:
    """Print a table of named checks.

    Passing checks are marked in green and failing ones in red, when possible.

    :param rows: The check name, whether it passed and a detail string.
    :return:

    """
    for name, passed, detail in rows:
        status = (
            termcolor.colored("PASS", "green")
            if passed
            else termcolor.colored("FAIL", "red")
        )

        print(f"{status}  {name:<36} {detail}")


def print_eval_result(label: str, result: EvalResult) -> None:
    """Print the headline metrics of an evaluation.

    The label will be output as cyan and the metrics as magenta, when possible.

    :param label: The run label.
    :param result: The metrics.
    :return:

    """
    print(
        termcolor.colored(label, "cyan"),
        termcolor.colored(
            f"auc={result.auc:.4f} f1={result.f1:.4f} acc={result.acc:.4f}", "magenta"
        ),
    )
