"""Run the numerical self checks."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
from typing import TYPE_CHECKING

# dmlm
from dmlm import selftest
from dmlm.commands.base import BaseCommand
from dmlm.commands.utils import print_check_table

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

_logger = logging.getLogger(__name__)


# =============================================================================
# CLASSES
# =============================================================================


class SelfTestCommand(BaseCommand):
    """Check the closed forms against the oracles and the gradients numerically.

    Exits 1 when any check fails.

    """

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def description(self) -> str:
        """A one line description of the command."""
        return "Run the oracle and gradient self checks."

    @property
    def name(self) -> str:
        """The subcommand name."""
        return "selftest"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def build_parser(self, parser: argparse.ArgumentParser) -> None:
        """Add the command's arguments to its subcommand parser.

        The command takes only the common arguments.

        :param parser: The subcommand parser.
        :return:

        """

    def run(self) -> int:
        """Run the command.

        :return: 0 when every check passes, otherwise 1.

        """
        seed = 0 if self.seed is None else self.seed

        results = selftest.run_selftest(seed)

        print_check_table(results)

        failed = [result.name for result in results if not result.passed]

        if failed:
            _logger.error("Failed checks: %s", ", ".join(failed))
            return 1

        return 0
