"""Generate the synthetic paired corpus."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import pathlib
from typing import TYPE_CHECKING

# dmlm
from dmlm.commands.base import BaseCommand
from dmlm.commands.utils import load_lexicon
from dmlm.datasets.storage import TEST_SPLIT, TRAIN_SPLIT, save_corpus
from dmlm.datasets.synthetic import generate_splits

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

_logger = logging.getLogger(__name__)


# =============================================================================
# CLASSES
# =============================================================================


class DataGenCommand(BaseCommand):
    """Write the train and test corpora described by a dataset spec.

    When the spec asks for more classes than the lexicon holds, the lexicon is
    extended with generated placeholder diseases.

    """

    def __init__(self) -> None:
        super().__init__()

        self._out = pathlib.Path("data")

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def description(self) -> str:
        """A one line description of the command."""
        return "Generate a synthetic image and report corpus."

    @property
    def name(self) -> str:
        """The subcommand name."""
        return "datagen"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def build_parser(self, parser: argparse.ArgumentParser) -> None:
        """Add the command's arguments to its subcommand parser.

        :param parser: The subcommand parser.
        :return:

        """
        parser.add_argument(
            "--spec",
            dest="config",
            default=None,
            help="A config file holding the [dataset] table (same as --config)",
        )

        parser.add_argument("--out", required=True, help="The output directory")

    def init_args_options(self, namespace: argparse.Namespace) -> None:
        """Initialize any extra options from parser data.

        :param namespace: Argument parser namespace.
        :return:

        """
        super().init_args_options(namespace)

        self._out = pathlib.Path(namespace.out)

    def run(self) -> int:
        """Run the command.

        :return: The command exit code.

        """
        config = self.load_config()
        spec = config.dataset

        lexicon = load_lexicon(config.reports)

        missing = spec.n_classes - len(lexicon)

        if missing > 0:
            _logger.info("Adding %s generated diseases to the lexicon", missing)
            lexicon = lexicon.with_synthetic_entries(missing, spec.seed)

        train_dir = self._out / TRAIN_SPLIT
        test_dir = self._out / TEST_SPLIT

        self.write_manifest(self._out, config, {"train": train_dir, "test": test_dir})

        train, test = generate_splits(
            spec,
            lexicon,
            max_len=config.encoder.max_len,
            vocab_size=config.encoder.vocab_size,
        )

        save_corpus(train_dir, train)
        save_corpus(test_dir, test)

        _logger.info(
            "Wrote %s train and %s test samples of %s classes, vocabulary of %s tokens",
            len(train),
            len(test),
            train.n_classes,
            len(train.vocab),
        )

        return 0
