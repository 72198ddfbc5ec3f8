"""Test the dmlm.commands.base module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
import argparse
import pathlib

# Third Party
import pytest

# dmlm
import dmlm.commands.base
import dmlm.config
import dmlm.manifest

# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def init_command(mocker, remove_abstract_methods):
    """Initialize a BaseCommand named 'test'."""
    remove_abstract_methods(dmlm.commands.base.BaseCommand)

    mocker.patch.object(
        dmlm.commands.base.BaseCommand,
        "name",
        new_callable=mocker.PropertyMock,
        return_value="test",
    )

    def _create():
        return dmlm.commands.base.BaseCommand()

    return _create


# =============================================================================
# TESTS
# =============================================================================


class TestBaseCommand:
    """Test dmlm.commands.base.BaseCommand."""

    def test___init__(self, init_command):
        """Test object initialization."""
        inst = init_command()

        assert inst._config_path is None
        assert inst._seed is None
        assert not inst._verbose

    # Properties

    def test_config_path(self, init_command):
        """Test BaseCommand.config_path."""
        inst = init_command()
        inst._config_path = pathlib.Path("run.toml")

        assert inst.config_path == pathlib.Path("run.toml")

        with pytest.raises(AttributeError):
            inst.config_path = None

    def test_seed(self, init_command):
        """Test BaseCommand.seed."""
        inst = init_command()
        inst._seed = 5

        assert inst.seed == 5

        with pytest.raises(AttributeError):
            inst.seed = None

    def test_verbose(self, init_command):
        """Test BaseCommand.verbose."""
        inst = init_command()
        inst._verbose = True

        assert inst.verbose

        with pytest.raises(AttributeError):
            inst.verbose = False

    # Methods

    @pytest.mark.parametrize("config", (None, "run.toml"))
    def test_init_args_options(self, init_command, config):
        """Test BaseCommand.init_args_options."""
        namespace = argparse.Namespace(config=config, seed=7, verbose=True)

        inst = init_command()
        inst.init_args_options(namespace)

        assert inst.config_path == (None if config is None else pathlib.Path(config))
        assert inst.seed == 7
        assert inst.verbose

    def test_load_config(self, mocker, init_command):
        """Test BaseCommand.load_config."""
        mock_load = mocker.patch("dmlm.commands.base.load_run_config")

        inst = init_command()
        inst._config_path = pathlib.Path("run.toml")
        inst._seed = 3

        result = inst.load_config()

        assert result == mock_load.return_value

        mock_load.assert_called_with(
            pathlib.Path("run.toml"),
            {"dataset": {"seed": 3}, "training": {"seed": 3}},
        )

    def test_write_manifest(self, tmp_path, init_command):
        """Test BaseCommand.write_manifest."""
        config = dmlm.config.RunConfig()

        inst = init_command()

        result = inst.write_manifest(tmp_path, config, {"out": tmp_path / "out.txt"})

        assert result.subcommand == "test"
        assert result.artifacts == {"out": str(tmp_path / "out.txt")}
        assert dmlm.manifest.read_manifest(tmp_path, "test") == result
