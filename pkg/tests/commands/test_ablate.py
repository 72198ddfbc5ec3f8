"""Test the dmlm.commands.ablate module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
import json

# dmlm
import dmlm.commands.ablate
import dmlm.config
import dmlm.evaluation.results
import dmlm.manifest
import dmlm.parser

# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _init(*args):
    inst = dmlm.commands.ablate.AblateCommand()

    parser = dmlm.parser.build_parser([inst])
    inst.init_args_options(parser.parse_args(["ablate", *args]))

    return inst


# =============================================================================
# TESTS
# =============================================================================


class TestAblateCommand:
    """Test dmlm.commands.ablate.AblateCommand."""

    # Properties

    def test_name(self):
        """Test AblateCommand.name."""
        assert dmlm.commands.ablate.AblateCommand().name == "ablate"

    # Methods

    def test_init_args_options(self):
        """Test AblateCommand.init_args_options."""
        inst = _init(
            "--data",
            "data",
            "--out",
            "out",
            "--lambdas",
            "0",
            "1",
            "--strategies",
            "none",
            "--report-styles",
        )

        assert inst._lambdas == (0.0, 1.0)
        assert inst._strategies == ("none",)
        assert inst._report_styles == ()

    def test_init_args_options__defaults(self):
        """Test the default variant settings."""
        inst = _init("--data", "data", "--out", "out")

        assert inst._lambdas == dmlm.commands.ablate.DEFAULT_LAMBDAS
        assert inst._strategies == ("appearance", "random", "none")
        assert inst._report_styles == ("structured", "findings")

    def test_run(self, tmp_path, shared_datadir, corpus_dir):
        """Test a single-variant ablation."""
        out = tmp_path / "ablation"

        inst = _init(
            "--config",
            str(shared_datadir / "tiny_run.toml"),
            "--data",
            str(corpus_dir),
            "--out",
            str(out),
            "--lambdas",
            "0.5",
            "--strategies",
            "--report-styles",
        )

        assert inst.run() == 0

        record = json.loads((out / dmlm.commands.ablate.ABLATION_FILE).read_text())

        assert [item["variant"] for item in record["variants"]] == ["lambda-0.5"]
        assert record["variants"][0]["loss_lambda"] == 0.5

        variant_dir = out / "lambda-0.5"

        assert (variant_dir / dmlm.evaluation.results.RESULTS_FILE).is_file()

        manifest = dmlm.manifest.read_manifest(variant_dir, "ablate")

        assert manifest.config.training.loss_lambda == 0.5
        assert dmlm.manifest.read_manifest(out, "ablate")


class Test_build_variants:
    """Test dmlm.commands.ablate.build_variants()."""

    def test(self):
        """Test one change per variant."""
        config = dmlm.config.RunConfig()

        result = dmlm.commands.ablate.build_variants(
            config, [0.0, 1.0], ["random"], ["findings"]
        )

        assert [name for name, _ in result] == [
            "lambda-0",
            "lambda-1",
            "strategy-random",
            "style-findings",
        ]

        by_name = dict(result)

        assert by_name["lambda-1"].training.masking_strategy == "appearance"
        assert by_name["strategy-random"].training.loss_lambda == 0.2
        assert by_name["style-findings"].training.report_style == "findings"

    def test_duplicates(self):
        """Test that variants equal to the base appear once."""
        config = dmlm.config.RunConfig()

        result = dmlm.commands.ablate.build_variants(
            config, [0.2], ["appearance"], ["structured"]
        )

        assert [name for name, _ in result] == ["lambda-0.2"]
