"""conftest.py file for testing dmlm."""

# =============================================================================
# IMPORTS
# =============================================================================

# Third Party
import pytest

# dmlm
import dmlm.config
import dmlm.datasets.storage
import dmlm.datasets.synthetic
import dmlm.encoders
import dmlm.evaluation.zero_shot
import dmlm.reports.lexicon
import dmlm.training.config
import dmlm.training.trainer

# Large enough for the longest default lexicon entry.
TINY_MAX_LEN = 96


# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def remove_abstract_methods(mocker):
    """Remove abstract methods for base class test purposes."""

    def _remove(cls):
        mocker.patch.object(cls, "__abstractmethods__", set())

    yield _remove


@pytest.fixture(autouse=True)
def clear_dmlm_env(monkeypatch):
    """Make sure no user environment leaks into the tests."""
    for name in (
        "DMLM_CONFIG_PATH",
        "DMLM_LLM_CACHE",
        "DMLM_LLM_ENDPOINT",
        "DMLM_LLM_MODEL",
        "DMLM_LLM_TOKEN",
    ):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def default_lexicon():
    """The packaged lexicon."""
    return dmlm.reports.lexicon.Lexicon.default()


@pytest.fixture
def tiny_spec():
    """A two class dataset spec with 6x6 grids of 4-value patches."""
    return dmlm.datasets.synthetic.DatasetSpec(
        n_samples=8,
        n_test=6,
        n_classes=2,
        grid_h=6,
        grid_w=6,
        patch_dim=4,
        seed=0,
    )


@pytest.fixture
def tiny_splits(tiny_spec, default_lexicon):
    """The train and test splits of the tiny spec."""
    return dmlm.datasets.synthetic.generate_splits(
        tiny_spec, default_lexicon, max_len=TINY_MAX_LEN
    )


@pytest.fixture
def tiny_dataset(tiny_splits):
    """The train split of the tiny spec."""
    return tiny_splits[0]


@pytest.fixture
def tiny_encoder_config(tiny_dataset):
    """An encoder configuration small enough for fast tests."""
    return dmlm.encoders.EncoderConfig(
        d_model=8,
        n_layers=1,
        n_heads=2,
        vocab_size=len(tiny_dataset.vocab),
        max_len=TINY_MAX_LEN,
        patch_dim=4,
        max_patches=36,
        mlp_ratio=2,
    )


@pytest.fixture
def tiny_model(tiny_encoder_config):
    """A freshly initialized tiny model."""
    return dmlm.training.trainer.build_model(tiny_encoder_config, 0)


@pytest.fixture
def tiny_run_config(tiny_spec, tiny_encoder_config):
    """A run configuration training the tiny model for a few steps."""
    return dmlm.config.RunConfig(
        encoder=tiny_encoder_config,
        training=dmlm.training.config.TrainingConfig(
            max_steps=3, batch_size=4, log_every=1, peak_lr=1e-3, encoder_lr=1e-3
        ),
        dataset=tiny_spec,
        evaluation=dmlm.evaluation.zero_shot.EvalConfig(batch_size=4),
    )


@pytest.fixture
def corpus_dir(tmp_path, tiny_splits):
    """A datagen style directory holding the tiny train and test corpora."""
    directory = tmp_path / "data"

    train, test = tiny_splits

    dmlm.datasets.storage.save_corpus(
        directory / dmlm.datasets.storage.TRAIN_SPLIT, train
    )
    dmlm.datasets.storage.save_corpus(
        directory / dmlm.datasets.storage.TEST_SPLIT, test
    )

    return directory
