"""Run pre-training and evaluation over a set of configuration variants."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import json
import logging
import pathlib
from typing import TYPE_CHECKING, Any, Dict, List, Sequence, Tuple

# dmlm
from dmlm.commands.base import BaseCommand
from dmlm.commands.evaluate import apply_checkpoint_config, run_evaluation
from dmlm.commands.pretrain import CHECKPOINT_FILE, METRICS_FILE, run_pretraining
from dmlm.commands.utils import print_eval_result
from dmlm.datasets.synthetic import REPORT_STYLES
from dmlm.evaluation.results import RESULTS_FILE
from dmlm.masking import MASKING_STRATEGIES
from dmlm.training.checkpoint import load_checkpoint
from dmlm.utils import atomic_write_text

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

    from dmlm.config import RunConfig

_logger = logging.getLogger(__name__)

ABLATION_FILE = "ablation.json"

DEFAULT_LAMBDAS = (0.0, 0.2, 0.5, 1.0)


# =============================================================================
# CLASSES
# =============================================================================


class AblateCommand(BaseCommand):
    """Vary one training setting at a time and compare zero-shot results.

    Each variant is trained and evaluated in its own subdirectory of the output
    directory; the comparison is written to ablation.json.

    """

    def __init__(self) -> None:
        super().__init__()

        self._data = pathlib.Path("data")
        self._out = pathlib.Path("ablation")
        self._lambdas: Tuple[float, ...] = DEFAULT_LAMBDAS
        self._report_styles: Tuple[str, ...] = REPORT_STYLES
        self._strategies: Tuple[str, ...] = MASKING_STRATEGIES

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def description(self) -> str:
        """A one line description of the command."""
        return "Compare loss weights, masking strategies and report styles."

    @property
    def name(self) -> str:
        """The subcommand name."""
        return "ablate"

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

        parser.add_argument(
            "--out", required=True, help="The ablation output directory"
        )

        parser.add_argument(
            "--lambdas",
            nargs="*",
            type=float,
            default=list(DEFAULT_LAMBDAS),
            help="Values of training.loss_lambda to try",
        )

        parser.add_argument(
            "--strategies",
            nargs="*",
            choices=MASKING_STRATEGIES,
            default=list(MASKING_STRATEGIES),
            help="Image masking strategies to try",
        )

        parser.add_argument(
            "--report-styles",
            nargs="*",
            choices=REPORT_STYLES,
            default=list(REPORT_STYLES),
            help="Report styles to try",
        )

    def init_args_options(self, namespace: argparse.Namespace) -> None:
        """Initialize any extra options from parser data.

        :param namespace: Argument parser namespace.
        :return:

        """
        super().init_args_options(namespace)

        self._data = pathlib.Path(namespace.data)
        self._out = pathlib.Path(namespace.out)
        self._lambdas = tuple(namespace.lambdas)
        self._report_styles = tuple(namespace.report_styles)
        self._strategies = tuple(namespace.strategies)

    def run(self) -> int:
        """Run the command.

        :return: The command exit code.

        """
        config = self.load_config()

        variants = build_variants(
            config, self._lambdas, self._strategies, self._report_styles
        )

        self.write_manifest(
            self._out,
            config,
            {"ablation": self._out / ABLATION_FILE, "data": self._data},
        )

        records = []

        for name, variant in variants:
            directory = self._out / name

            self.write_manifest(
                directory,
                variant,
                {
                    "checkpoint": directory / CHECKPOINT_FILE,
                    "data": self._data,
                    "metrics": directory / METRICS_FILE,
                    "results": directory / RESULTS_FILE,
                },
            )

            _logger.info("Running variant %s", name)

            outcome = run_pretraining(variant, self._data, directory)

            checkpoint = load_checkpoint(outcome.checkpoint)
            result = run_evaluation(
                apply_checkpoint_config(variant, checkpoint),
                checkpoint,
                self._data,
                directory,
            )

            print_eval_result(name, result)

            records.append(
                {
                    "variant": name,
                    "loss_lambda": variant.training.loss_lambda,
                    "masking_strategy": variant.training.masking_strategy,
                    "report_style": variant.training.report_style,
                    "auc": result.auc,
                    "f1": result.f1,
                    "acc": result.acc,
                    "final_total": (
                        outcome.history[-1].total if outcome.history else None
                    ),
                }
            )

        atomic_write_text(
            self._out / ABLATION_FILE,
            json.dumps({"variants": records}, indent=2, sort_keys=True) + "\n",
        )

        return 0


# =============================================================================
# FUNCTIONS
# =============================================================================


def build_variants(
    config: RunConfig,
    lambdas: Sequence[float],
    strategies: Sequence[str],
    report_styles: Sequence[str],
) -> List[Tuple[str, RunConfig]]:
    """Build the one-setting-at-a-time variants of a configuration.

    Variants equal to an earlier one are dropped.

    >>> from dmlm.config import RunConfig
    >>> variants = build_variants(RunConfig(), [0.2, 0.5], ["appearance"], [])
    >>> [name for name, _ in variants]
    ['lambda-0.2', 'lambda-0.5']

    :param config: The base configuration.
    :param lambdas: Values of training.loss_lambda.
    :param strategies: Masking strategies.
    :param report_styles: Report styles.
    :return: The variant names and configurations, in order.

    """
    changes: List[Tuple[str, Dict[str, Any]]] = []

    changes.extend(
        (f"lambda-{value:g}", {"loss_lambda": value}) for value in lambdas
    )
    changes.extend(
        (f"strategy-{value}", {"masking_strategy": value}) for value in strategies
    )
    changes.extend(
        (f"style-{value}", {"report_style": value}) for value in report_styles
    )

    variants = []
    seen = set()

    for name, change in changes:
        variant = config.replace(training=config.training.replace(**change))
        digest = variant.config_hash()

        if digest in seen:
            continue

        seen.add(digest)
        variants.append((name, variant))

    return variants
