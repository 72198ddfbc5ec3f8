"""Generate a single structured report."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import pathlib
from typing import TYPE_CHECKING, List, Optional

# Third Party
import termcolor

# dmlm
from dmlm.commands.base import BaseCommand
from dmlm.commands.utils import load_lexicon
from dmlm.reports.backends import BACKEND_NAMES, build_backend, generate_report
from dmlm.reports.prompts import render_appearance_prompt, render_definition_prompt
from dmlm.reports.report import serialize_report
from dmlm.utils import atomic_write_text

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

_logger = logging.getLogger(__name__)


# =============================================================================
# CLASSES
# =============================================================================


class ReportGenCommand(BaseCommand):
    """Write the structured report of a disease and a set of findings."""

    def __init__(self) -> None:
        super().__init__()

        self._backend: Optional[str] = None
        self._disease = ""
        self._findings: List[str] = []
        self._out = pathlib.Path("report.txt")

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def description(self) -> str:
        """A one line description of the command."""
        return "Generate a structured report for a disease and its findings."

    @property
    def name(self) -> str:
        """The subcommand name."""
        return "reportgen"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def build_parser(self, parser: argparse.ArgumentParser) -> None:
        """Add the command's arguments to its subcommand parser.

        :param parser: The subcommand parser.
        :return:

        """
        parser.add_argument("--disease", required=True, help="The disease name")

        parser.add_argument(
            "--findings",
            nargs="*",
            default=[],
            help="Finding phrases, one observation line each",
        )

        parser.add_argument(
            "--backend",
            choices=BACKEND_NAMES,
            default=None,
            help="The report backend, overriding reports.backend",
        )

        parser.add_argument(
            "--out", default="report.txt", help="The report file to write"
        )

    def init_args_options(self, namespace: argparse.Namespace) -> None:
        """Initialize any extra options from parser data.

        :param namespace: Argument parser namespace.
        :return:

        """
        super().init_args_options(namespace)

        self._backend = namespace.backend
        self._disease = namespace.disease
        self._findings = list(namespace.findings)
        self._out = pathlib.Path(namespace.out)

    def run(self) -> int:
        """Run the command.

        :return: The command exit code.

        """
        config = self.load_config()

        if self._backend is not None:
            config = config.replace(
                reports=config.reports.replace(backend=self._backend)
            )

        self.write_manifest(self._out.parent, config, {"report": self._out})

        if self.verbose:
            print(termcolor.colored(render_definition_prompt(self._disease), "cyan"))
            print(termcolor.colored(render_appearance_prompt(self._disease), "cyan"))

        backend = build_backend(config.reports, load_lexicon(config.reports))

        report = generate_report(self._disease, self._findings, backend)

        atomic_write_text(self._out, serialize_report(report))

        _logger.info("Wrote %s report to %s", backend.name, self._out)

        return 0
