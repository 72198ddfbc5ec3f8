"""Evaluate a pre-trained checkpoint zero-shot."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import pathlib
from typing import TYPE_CHECKING, Any, Dict, Optional

# dmlm
from dmlm.commands.base import BaseCommand
from dmlm.commands.utils import print_eval_result
from dmlm.datasets.storage import TEST_SPLIT, load_corpus, split_directory
from dmlm.encoders import EncoderConfig
from dmlm.errors import CheckpointError, DegenerateInputError, VocabMismatchError
from dmlm.evaluation.diagnostics import (
    collapse_diagnostics,
    lesion_saliency_diagnostics,
)
from dmlm.evaluation.metrics import compute_metrics
from dmlm.evaluation.results import RESULTS_FILE, SUMMARY_FILE, write_results
from dmlm.evaluation.zero_shot import build_class_prompts, evaluate_samples
from dmlm.manifest import MANIFEST_FILE, read_manifest
from dmlm.training.checkpoint import load_checkpoint
from dmlm.training.config import TrainingConfig
from dmlm.training.trainer import build_model

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

    from dmlm.config import RunConfig
    from dmlm.datasets.synthetic import DatasetSpec
    from dmlm.evaluation.metrics import EvalResult
    from dmlm.training.checkpoint import Checkpoint

_logger = logging.getLogger(__name__)


# =============================================================================
# CLASSES
# =============================================================================


class EvalCommand(BaseCommand):
    """Score the test split against the class prompts and write the results."""

    def __init__(self) -> None:
        super().__init__()

        self._checkpoint = pathlib.Path("checkpoint.dmlm")
        self._data = pathlib.Path("data")
        self._out = pathlib.Path("eval")

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def description(self) -> str:
        """A one line description of the command."""
        return "Evaluate a checkpoint with zero-shot classification."

    @property
    def name(self) -> str:
        """The subcommand name."""
        return "eval"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def build_parser(self, parser: argparse.ArgumentParser) -> None:
        """Add the command's arguments to its subcommand parser.

        :param parser: The subcommand parser.
        :return:

        """
        parser.add_argument(
            "--checkpoint", required=True, help="The checkpoint to evaluate"
        )

        parser.add_argument(
            "--data", required=True, help="The datagen output directory"
        )

        parser.add_argument("--out", required=True, help="The results directory")

    def init_args_options(self, namespace: argparse.Namespace) -> None:
        """Initialize any extra options from parser data.

        :param namespace: Argument parser namespace.
        :return:

        """
        super().init_args_options(namespace)

        self._checkpoint = pathlib.Path(namespace.checkpoint)
        self._data = pathlib.Path(namespace.data)
        self._out = pathlib.Path(namespace.out)

    def run(self) -> int:
        """Run the command.

        :return: The command exit code.

        """
        checkpoint = load_checkpoint(self._checkpoint)

        dataset = None

        # Corpora written by datagen record the dataset section they were built with.
        if (self._data / MANIFEST_FILE).is_file():
            dataset = read_manifest(self._data, "datagen").config.dataset

        config = apply_checkpoint_config(self.load_config(), checkpoint, dataset)

        self.write_manifest(
            self._out,
            config,
            {
                "checkpoint": self._checkpoint,
                "data": self._data,
                "results": self._out / RESULTS_FILE,
                "summary": self._out / SUMMARY_FILE,
            },
        )

        result = run_evaluation(config, checkpoint, self._data, self._out)

        print_eval_result(str(self._checkpoint), result)

        return 0


# =============================================================================
# FUNCTIONS
# =============================================================================


def apply_checkpoint_config(
    config: RunConfig, checkpoint: Checkpoint, dataset: Optional[DatasetSpec] = None
) -> RunConfig:
    """Take the encoder and training sections from a checkpoint.

    :param config: The resolved run configuration.
    :param checkpoint: The checkpoint.
    :param dataset: Optional dataset section replacing the configured one.
    :return: The configuration the checkpoint was trained with.

    """
    try:
        encoder = EncoderConfig.from_dict(checkpoint.config["encoder"])
        training = TrainingConfig.from_dict(checkpoint.config["training"])

    except KeyError as inst:
        raise CheckpointError(
            f"Checkpoint config has no {inst.args[0]!r} section"
        ) from inst

    return config.replace(
        encoder=encoder, training=training, dataset=dataset or config.dataset
    )


def run_evaluation(
    config: RunConfig,
    checkpoint: Checkpoint,
    data_dir: pathlib.Path,
    out_dir: pathlib.Path,
) -> EvalResult:
    """Evaluate a checkpoint on the test split of a corpus.

    :param config: The run configuration, as returned by apply_checkpoint_config().
    :param checkpoint: The checkpoint.
    :param data_dir: The datagen output directory, or a test corpus directory.
    :param out_dir: The results directory.
    :return: The metrics.

    """
    report_style = config.training.report_style

    dataset = load_corpus(
        split_directory(data_dir, TEST_SPLIT), report_style, config.encoder.max_len
    )

    stored_digest = checkpoint.metadata.get("vocab_digest")

    if stored_digest != dataset.vocab.digest:
        raise VocabMismatchError(
            f"Vocabulary mismatch: the checkpoint was trained with vocabulary "
            f"{stored_digest}, the corpus has {dataset.vocab.digest}"
        )

    model = build_model(config.encoder, config.training.seed)
    checkpoint.restore(model)

    # Prompts are full structured reports whatever style the model was trained on.
    prompts = build_class_prompts(
        dataset.classes, dataset.vocab, "structured", config.encoder.max_len
    )
    scores = evaluate_samples(model, dataset, prompts, config.evaluation)

    result = compute_metrics(scores, dataset.labels, dataset.classes.diseases)

    diagnostics: Dict[str, Any] = {}

    try:
        diagnostics["collapse"] = collapse_diagnostics(
            model, dataset, config.evaluation.batch_size
        ).to_dict()

    except DegenerateInputError as inst:
        _logger.warning("Skipping collapse diagnostics: %s", inst)

    if report_style == "structured":
        try:
            saliency = lesion_saliency_diagnostics(model, dataset)
            diagnostics["saliency"] = saliency.to_dict()

        except DegenerateInputError as inst:
            _logger.warning("Skipping saliency diagnostics: %s", inst)

    write_results(out_dir, result, config.config_hash(), diagnostics)

    _logger.info("Wrote results to %s", out_dir)

    return result
