"""Argument parsing for the dmlm command line."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import argparse
from typing import TYPE_CHECKING, Sequence

# Imports for type checking.
if TYPE_CHECKING:
    from dmlm.commands.base import BaseCommand


# =============================================================================
# CLASSES
# =============================================================================


class _UltimateHelpFormatter(
    argparse.RawTextHelpFormatter, argparse.ArgumentDefaultsHelpFormatter
):
    """Formatter class that combines RawTextHelpFormatter and ArgumentDefaultsHelpFormatter."""


# =============================================================================
# FUNCTIONS
# =============================================================================


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Add the arguments every subcommand accepts.

    :param parser: The subcommand parser.
    :return:

    """
    parser.add_argument(
        "--config",
        action="store",
        default=None,
        help="A TOML config file layered over the defaults and the selected preset",
    )

    parser.add_argument(
        "--seed",
        action="store",
        type=int,
        default=None,
        help="Override the dataset and training seeds",
    )

    parser.add_argument("--verbose", action="store_true", help="Engage verbose output.")


def build_parser(
    commands: Sequence[BaseCommand], prog: str = "dmlm"
) -> argparse.ArgumentParser:
    """Build the parser with one subcommand per command.

    :param commands: The available commands.
    :param prog: The name of the program.
    :return: The constructed parser.

    """
    parser = argparse.ArgumentParser(
        prog=prog,
        description="""Distribution-based masked image-language modeling.

Generate structured reports and synthetic corpora, pre-train the dual
encoder and evaluate it zero-shot.
""",
        formatter_class=_UltimateHelpFormatter,
    )

    subparsers = parser.add_subparsers(
        dest="subcommand", metavar="SUBCOMMAND", required=True
    )

    for command in commands:
        subparser = subparsers.add_parser(
            command.name,
            help=command.description,
            description=command.description,
            formatter_class=_UltimateHelpFormatter,
        )

        add_common_arguments(subparser)
        command.build_parser(subparser)

    return parser
