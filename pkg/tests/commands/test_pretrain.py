"""Test the dmlm.commands.pretrain module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
import math

# Third Party
import pytest

# dmlm
import dmlm.commands.pretrain
import dmlm.datasets.batching
import dmlm.datasets.storage
import dmlm.errors
import dmlm.manifest
import dmlm.parser
import dmlm.training.checkpoint
import dmlm.training.metrics_log
import dmlm.training.trainer

# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _init(*args):
    inst = dmlm.commands.pretrain.PretrainCommand()

    parser = dmlm.parser.build_parser([inst])
    inst.init_args_options(parser.parse_args(["pretrain", *args]))

    return inst


# =============================================================================
# TESTS
# =============================================================================


class TestPretrainCommand:
    """Test dmlm.commands.pretrain.PretrainCommand."""

    # Properties

    def test_name(self):
        """Test PretrainCommand.name."""
        assert dmlm.commands.pretrain.PretrainCommand().name == "pretrain"

    # Methods

    def test_init_args_options(self):
        """Test PretrainCommand.init_args_options."""
        inst = _init(
            "--data", "data", "--out", "run", "--resume", "run/checkpoint.dmlm"
        )

        assert str(inst._data) == "data"
        assert str(inst._out) == "run"
        assert str(inst._resume) == "run/checkpoint.dmlm"

    def test_run(self, tmp_path, shared_datadir, corpus_dir):
        """Test a short run writing every artifact."""
        out = tmp_path / "run"

        inst = _init(
            "--config",
            str(shared_datadir / "tiny_run.toml"),
            "--data",
            str(corpus_dir),
            "--out",
            str(out),
        )

        assert inst.run() == 0

        checkpoint = dmlm.training.checkpoint.load_checkpoint(
            out / dmlm.commands.pretrain.CHECKPOINT_FILE
        )

        assert checkpoint.step == 3
        assert checkpoint.metadata["n_classes"] == 2

        records = dmlm.training.metrics_log.read_metrics(
            out / dmlm.commands.pretrain.METRICS_FILE
        )

        assert [record["step"] for record in records] == [0, 1, 2]

        manifest = dmlm.manifest.read_manifest(out, "pretrain")

        assert manifest.config.training.max_steps == 3
        assert set(manifest.artifacts) == {"checkpoint", "data", "metrics"}


def test_checkpoint_metadata(tiny_dataset):
    """Test dmlm.commands.pretrain.checkpoint_metadata()."""
    result = dmlm.commands.pretrain.checkpoint_metadata(tiny_dataset)

    assert result == {
        "n_classes": 2,
        "report_style": "structured",
        "vocab_digest": tiny_dataset.vocab.digest,
    }


class Test_run_pretraining:
    """Test dmlm.commands.pretrain.run_pretraining()."""

    def test(self, tmp_path, tiny_run_config, corpus_dir):
        """Test the outcome of a short run."""
        result = dmlm.commands.pretrain.run_pretraining(
            tiny_run_config, corpus_dir, tmp_path
        )

        assert len(result.history) == 3
        assert all(math.isfinite(item.total) for item in result.history)
        assert result.checkpoint.is_file()
        assert result.metrics.is_file()

    def test_checkpoint_every(self, mocker, tmp_path, tiny_run_config, corpus_dir):
        """Test periodic checkpoints."""
        config = tiny_run_config.replace(
            training=tiny_run_config.training.replace(checkpoint_every=2)
        )

        mock_save = mocker.spy(dmlm.training.trainer.Trainer, "save")

        dmlm.commands.pretrain.run_pretraining(config, corpus_dir, tmp_path)

        # Once after step 1 and once at the end.
        assert mock_save.call_count == 2

    def test_vocab_too_large(self, tmp_path, tiny_run_config, corpus_dir):
        """Test an encoder with too small a vocabulary."""
        config = tiny_run_config.replace(
            encoder=tiny_run_config.encoder.replace(vocab_size=5)
        )

        with pytest.raises(dmlm.errors.ConfigError, match="vocab_size"):
            dmlm.commands.pretrain.run_pretraining(config, corpus_dir, tmp_path)

    def test_missing_corpus(self, tmp_path, tiny_run_config):
        """Test a data directory without a corpus."""
        with pytest.raises(FileNotFoundError):
            dmlm.commands.pretrain.run_pretraining(
                tiny_run_config, tmp_path / "nothing", tmp_path / "run"
            )

    def test_resume(self, tmp_path, tiny_run_config, corpus_dir):
        """Test continuing an interrupted run."""
        full = dmlm.commands.pretrain.run_pretraining(
            tiny_run_config, corpus_dir, tmp_path / "full"
        )

        dataset = dmlm.datasets.storage.load_corpus(
            corpus_dir / "train", max_len=tiny_run_config.encoder.max_len
        )
        training = tiny_run_config.training

        trainer = dmlm.training.trainer.Trainer(
            dmlm.training.trainer.build_model(tiny_run_config.encoder, training.seed),
            training,
            training.total_steps(len(dataset)),
        )

        batch = next(
            dmlm.datasets.batching.batch_iter(
                dataset, training.batch_size, training.seed, epoch=0
            )
        )

        out = tmp_path / "resumed"
        metrics_path = out / dmlm.commands.pretrain.METRICS_FILE
        out.mkdir()

        # The interrupted run logged a step after its last checkpoint.
        with dmlm.training.metrics_log.MetricsLog(metrics_path) as log:
            log.write(0, 1e-3, trainer.train_step(batch))
            log.write(1, 1e-3, full.history[1])

        trainer.save(
            out / "interrupted.dmlm",
            dmlm.commands.pretrain.checkpoint_metadata(dataset),
        )

        result = dmlm.commands.pretrain.run_pretraining(
            tiny_run_config, corpus_dir, out, resume=out / "interrupted.dmlm"
        )

        records = dmlm.training.metrics_log.read_metrics(metrics_path)

        assert len(result.history) == 2
        assert result.history[0].total == pytest.approx(full.history[1].total, rel=1e-5)
        assert [record["step"] for record in records] == [0, 1, 2]
