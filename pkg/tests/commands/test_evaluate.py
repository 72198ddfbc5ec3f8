"""Test the dmlm.commands.evaluate module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
import dataclasses
import json

# Third Party
import pytest

# dmlm
import dmlm.commands.evaluate
import dmlm.commands.pretrain
import dmlm.config
import dmlm.errors
import dmlm.evaluation.results
import dmlm.manifest
import dmlm.parser
import dmlm.training.checkpoint

# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def checkpoint_path(tmp_path, tiny_run_config, corpus_dir):
    """The checkpoint of a short pre-training run on the tiny corpus."""
    outcome = dmlm.commands.pretrain.run_pretraining(
        tiny_run_config, corpus_dir, tmp_path / "run"
    )

    return outcome.checkpoint


def _init(*args):
    inst = dmlm.commands.evaluate.EvalCommand()

    parser = dmlm.parser.build_parser([inst])
    inst.init_args_options(parser.parse_args(["eval", *args]))

    return inst


# =============================================================================
# TESTS
# =============================================================================


class TestEvalCommand:
    """Test dmlm.commands.evaluate.EvalCommand."""

    # Properties

    def test_name(self):
        """Test EvalCommand.name."""
        assert dmlm.commands.evaluate.EvalCommand().name == "eval"

    # Methods

    def test_run(self, tmp_path, shared_datadir, corpus_dir, checkpoint_path, capsys):
        """Test evaluating with a config file."""
        out = tmp_path / "eval"

        inst = _init(
            "--config",
            str(shared_datadir / "tiny_run.toml"),
            "--checkpoint",
            str(checkpoint_path),
            "--data",
            str(corpus_dir),
            "--out",
            str(out),
        )

        assert inst.run() == 0

        assert (out / dmlm.evaluation.results.RESULTS_FILE).is_file()
        assert (out / dmlm.evaluation.results.SUMMARY_FILE).is_file()
        assert "auc=" in capsys.readouterr().out

        manifest = dmlm.manifest.read_manifest(out, "eval")

        assert manifest.artifacts["checkpoint"] == str(checkpoint_path)

    def test_run__datagen_manifest(
        self, tmp_path, tiny_run_config, corpus_dir, checkpoint_path
    ):
        """Test that the dataset section comes from the corpus manifest."""
        dmlm.manifest.RunManifest("datagen", tiny_run_config, 0).write(corpus_dir)

        out = tmp_path / "eval"

        inst = _init(
            "--checkpoint",
            str(checkpoint_path),
            "--data",
            str(corpus_dir),
            "--out",
            str(out),
        )

        assert inst.run() == 0

        manifest = dmlm.manifest.read_manifest(out, "eval")

        assert manifest.config.dataset == tiny_run_config.dataset
        assert manifest.config.encoder == tiny_run_config.encoder

    def test_run__missing_checkpoint(self, tmp_path, corpus_dir):
        """Test a checkpoint which does not exist."""
        inst = _init(
            "--checkpoint",
            str(tmp_path / "none.dmlm"),
            "--data",
            str(corpus_dir),
            "--out",
            str(tmp_path / "eval"),
        )

        with pytest.raises(FileNotFoundError):
            inst.run()


class Test_apply_checkpoint_config:
    """Test dmlm.commands.evaluate.apply_checkpoint_config()."""

    def test(self, tiny_run_config, checkpoint_path):
        """Test taking the trained sections."""
        checkpoint = dmlm.training.checkpoint.load_checkpoint(checkpoint_path)

        result = dmlm.commands.evaluate.apply_checkpoint_config(
            tiny_run_config.replace(
                evaluation=tiny_run_config.evaluation.replace(scoring="kl")
            ),
            checkpoint,
        )

        assert result.encoder == tiny_run_config.encoder
        assert result.training == tiny_run_config.training
        assert result.evaluation.scoring == "kl"

    def test_dataset(self, tiny_run_config, checkpoint_path):
        """Test replacing the dataset section at the same time."""
        checkpoint = dmlm.training.checkpoint.load_checkpoint(checkpoint_path)

        result = dmlm.commands.evaluate.apply_checkpoint_config(
            dmlm.config.RunConfig(), checkpoint, tiny_run_config.dataset
        )

        assert result.dataset == tiny_run_config.dataset

    def test_mismatch(self, checkpoint_path):
        """Test a configured dataset the checkpoint's encoder cannot take."""
        checkpoint = dmlm.training.checkpoint.load_checkpoint(checkpoint_path)

        with pytest.raises(dmlm.errors.ConfigError, match="patch_dim"):
            dmlm.commands.evaluate.apply_checkpoint_config(
                dmlm.config.RunConfig(), checkpoint
            )

    def test_missing_section(self, tiny_run_config, checkpoint_path):
        """Test a checkpoint without a training section."""
        checkpoint = dmlm.training.checkpoint.load_checkpoint(checkpoint_path)
        checkpoint = dataclasses.replace(
            checkpoint, config={"encoder": checkpoint.config["encoder"]}
        )

        with pytest.raises(dmlm.errors.CheckpointError, match="'training'"):
            dmlm.commands.evaluate.apply_checkpoint_config(tiny_run_config, checkpoint)


class Test_run_evaluation:
    """Test dmlm.commands.evaluate.run_evaluation()."""

    def test(self, tmp_path, tiny_run_config, corpus_dir, checkpoint_path):
        """Test the metrics and the results files."""
        checkpoint = dmlm.training.checkpoint.load_checkpoint(checkpoint_path)
        out = tmp_path / "eval"

        result = dmlm.commands.evaluate.run_evaluation(
            tiny_run_config, checkpoint, corpus_dir, out
        )

        assert 0.0 <= result.acc <= 1.0
        assert len(result.per_class) == 2

        record = json.loads((out / dmlm.evaluation.results.RESULTS_FILE).read_text())

        assert record["config_hash"] == tiny_run_config.config_hash()
        assert record["metrics"]["acc"] == result.acc
        assert set(record["diagnostics"]) == {"collapse", "saliency"}

    def test_vocab_mismatch(
        self, tmp_path, tiny_run_config, corpus_dir, checkpoint_path
    ):
        """Test a corpus built with another vocabulary."""
        checkpoint = dmlm.training.checkpoint.load_checkpoint(checkpoint_path)
        checkpoint = dataclasses.replace(checkpoint, metadata={"vocab_digest": "other"})

        with pytest.raises(dmlm.errors.VocabMismatchError):
            dmlm.commands.evaluate.run_evaluation(
                tiny_run_config, checkpoint, corpus_dir, tmp_path / "eval"
            )
