"""The dmlm command line entry point.

Exit codes: 0 on success, 1 when selftest checks fail, 2 for user and input
errors and 3 for numerical failures.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import sys
from typing import List, Optional, Sequence

# Third Party
import termcolor

# dmlm
from dmlm.commands.ablate import AblateCommand
from dmlm.commands.base import BaseCommand
from dmlm.commands.datagen import DataGenCommand
from dmlm.commands.evaluate import EvalCommand
from dmlm.commands.pretrain import PretrainCommand
from dmlm.commands.reportgen import ReportGenCommand
from dmlm.commands.selftest import SelfTestCommand
from dmlm.errors import DMLMError, NonFiniteLossError
from dmlm.parser import build_parser

EXIT_USER_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

_LEVEL_COLORS = {
    logging.DEBUG: "blue",
    logging.INFO: "green",
    logging.WARNING: "yellow",
    logging.ERROR: "red",
    logging.CRITICAL: "red",
}


# =============================================================================
# CLASSES
# =============================================================================


class ColoredFormatter(logging.Formatter):
    """Formatter colouring each record by its level, when possible."""

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        color = _LEVEL_COLORS.get(record.levelno)

        if color is None:
            return message

        return termcolor.colored(message, color)


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _print_error(message: str) -> None:
    """Print an error message to stderr.

    :param message: The message.
    :return:

    """
    print(termcolor.colored(f"error: {message}", "red"), file=sys.stderr)


# =============================================================================
# FUNCTIONS
# =============================================================================


def build_commands() -> List[BaseCommand]:
    """Build one instance of every command.

    :return: The commands, in help order.

    """
    return [
        ReportGenCommand(),
        DataGenCommand(),
        PretrainCommand(),
        EvalCommand(),
        SelfTestCommand(),
        AblateCommand(),
    ]


def configure_logging(verbose: bool = False) -> None:
    """Install the coloured stream handler on the dmlm logger.

    :param verbose: Whether to log debug records.
    :return:

    """
    logger = logging.getLogger("dmlm")

    for handler in list(logger.handlers):
        if isinstance(handler.formatter, ColoredFormatter):
            logger.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(ColoredFormatter("%(levelname)s: %(message)s"))

    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run a dmlm subcommand.

    :param argv: Optional arguments, otherwise sys.argv is used.
    :return: The exit code.

    """
    commands = build_commands()

    parser = build_parser(commands)

    parsed_args = parser.parse_args(argv)

    configure_logging(parsed_args.verbose)

    command = next(item for item in commands if item.name == parsed_args.subcommand)
    command.init_args_options(parsed_args)

    try:
        return command.run()

    except NonFiniteLossError as inst:
        _print_error(str(inst))

        for key, value in inst.breakdown.to_dict().items():
            print(f"  {key} = {value}", file=sys.stderr)

        return EXIT_NUMERICAL_ERROR

    except (DMLMError, FileNotFoundError) as inst:
        _print_error(str(inst))

        return EXIT_USER_ERROR
