"""Pre-train the dual encoder on a synthetic corpus."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import logging
import pathlib
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, List, Optional

# dmlm
from dmlm.commands.base import BaseCommand
from dmlm.datasets.storage import TRAIN_SPLIT, load_corpus, split_directory
from dmlm.errors import ConfigError
from dmlm.training.checkpoint import load_checkpoint
from dmlm.training.metrics_log import MetricsLog, truncate_metrics
from dmlm.training.trainer import Trainer, build_model

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

    from dmlm.config import RunConfig
    from dmlm.datasets.synthetic import SyntheticDataset
    from dmlm.training.losses import LossBreakdown

_logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.dmlm"
METRICS_FILE = "metrics.jsonl"


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class PretrainOutcome:
    """The artifacts and losses of a pre-training run."""

    checkpoint: pathlib.Path
    metrics: pathlib.Path
    history: List[LossBreakdown]


class PretrainCommand(BaseCommand):
    """Train the dual encoder, writing the metrics log and the final checkpoint."""

    def __init__(self) -> None:
        super().__init__()

        self._data = pathlib.Path("data")
        self._out = pathlib.Path("run")
        self._resume: Optional[pathlib.Path] = None

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def description(self) -> str:
        """A one line description of the command."""
        return "Pre-train the dual encoder."

    @property
    def name(self) -> str:
        """The subcommand name."""
        return "pretrain"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def build_parser(self, parser: argparse.ArgumentParser) -> None:
        """Add the command's arguments to its subcommand parser.

        :param parser: The subcommand parser.
        :return:

        """
        parser.add_argument(
            "--data", required=True, help="The datagen output directory"
        )

        parser.add_argument("--out", required=True, help="The run output directory")

        parser.add_argument(
            "--resume",
            default=None,
            help="Continue from a checkpoint written by an interrupted run",
        )

    def init_args_options(self, namespace: argparse.Namespace) -> None:
        """Initialize any extra options from parser data.

        :param namespace: Argument parser namespace.
        :return:

        """
        super().init_args_options(namespace)

        self._data = pathlib.Path(namespace.data)
        self._out = pathlib.Path(namespace.out)

        if namespace.resume is not None:
            self._resume = pathlib.Path(namespace.resume)

    def run(self) -> int:
        """Run the command.

        :return: The command exit code.

        """
        config = self.load_config()

        self.write_manifest(
            self._out,
            config,
            {
                "data": self._data,
                "checkpoint": self._out / CHECKPOINT_FILE,
                "metrics": self._out / METRICS_FILE,
            },
        )

        outcome = run_pretraining(config, self._data, self._out, self._resume)

        if outcome.history:
            _logger.info(
                "Finished after %s steps, final total loss %.4f",
                len(outcome.history),
                outcome.history[-1].total,
            )

        return 0


# =============================================================================
# FUNCTIONS
# =============================================================================


def checkpoint_metadata(dataset: SyntheticDataset) -> Dict[str, Any]:
    """Build the checkpoint metadata tying a model to its corpus.

    :param dataset: The training dataset.
    :return: The metadata.

    """
    return {
        "n_classes": dataset.n_classes,
        "report_style": dataset.report_style,
        "vocab_digest": dataset.vocab.digest,
    }


def run_pretraining(
    config: RunConfig,
    data_dir: pathlib.Path,
    out_dir: pathlib.Path,
    resume: Optional[pathlib.Path] = None,
) -> PretrainOutcome:
    """Train a model on the train split of a corpus.

    :param config: The run configuration.
    :param data_dir: The datagen output directory, or a train corpus directory.
    :param out_dir: The run output directory.
    :param resume: Optional checkpoint of an interrupted run to continue from.
    :return: The written artifacts and the losses of the steps run.

    """
    training = config.training

    dataset = load_corpus(
        split_directory(data_dir, TRAIN_SPLIT),
        training.report_style,
        config.encoder.max_len,
    )

    if len(dataset.vocab) > config.encoder.vocab_size:
        raise ConfigError(
            f"The corpus vocabulary has {len(dataset.vocab)} tokens but "
            f"encoder.vocab_size is {config.encoder.vocab_size}"
        )

    model = build_model(config.encoder, training.seed)
    trainer = Trainer(model, training, training.total_steps(len(dataset)))

    checkpoint_path = out_dir / CHECKPOINT_FILE
    metrics_path = out_dir / METRICS_FILE
    metadata = checkpoint_metadata(dataset)

    if resume is not None:
        trainer.resume(load_checkpoint(resume))
        truncate_metrics(metrics_path, trainer.step)

        _logger.info("Resuming from step %s", trainer.step)

    # pylint: disable=unused-argument
    def _on_step(step: int, breakdown: LossBreakdown) -> None:
        if training.checkpoint_every and (step + 1) % training.checkpoint_every == 0:
            trainer.save(checkpoint_path, metadata)

    with MetricsLog(metrics_path, append=resume is not None) as metrics_log:
        history = trainer.fit(dataset, metrics_log, on_step=_on_step)

    trainer.save(checkpoint_path, metadata)

    _logger.info("Wrote %s", checkpoint_path)

    return PretrainOutcome(checkpoint_path, metrics_path, history)
