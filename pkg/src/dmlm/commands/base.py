"""Base class implementation for a dmlm subcommand."""

# Future
from __future__ import annotations

# Standard Library
import abc
import pathlib
from typing import TYPE_CHECKING, Mapping, Optional

# dmlm
from dmlm.config import load_run_config, seed_overrides
from dmlm.manifest import RunManifest

# Imports for type checking.
if TYPE_CHECKING:
    import argparse

    from dmlm.config import RunConfig


# =============================================================================
# CLASSES
# =============================================================================


class BaseCommand(abc.ABC):
    """The base subcommand class."""

    def __init__(self) -> None:
        self._config_path: Optional[pathlib.Path] = None
        self._seed: Optional[int] = None
        self._verbose = False

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def config_path(self) -> Optional[pathlib.Path]:
        """The user config file, if any."""
        return self._config_path

    @property
    @abc.abstractmethod
    def description(self) -> str:
        """A one line description of the command."""

    @property
    @abc.abstractmethod
    def name(self) -> str:
        """The subcommand name."""

    @property
    def seed(self) -> Optional[int]:
        """The seed passed on the command line, if any."""
        return self._seed

    @property
    def verbose(self) -> bool:
        """Whether the command should produce verbose output."""
        return self._verbose

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @abc.abstractmethod
    def build_parser(self, parser: argparse.ArgumentParser) -> None:
        """Add the command's arguments to its subcommand parser.

        :param parser: The subcommand parser.
        :return:

        """

    def init_args_options(self, namespace: argparse.Namespace) -> None:
        """Initialize any extra options from parser data.

        :param namespace: Argument parser namespace.
        :return:

        """
        if namespace.config is not None:
            self._config_path = pathlib.Path(namespace.config)

        self._seed = namespace.seed
        self._verbose = namespace.verbose

    def load_config(self) -> RunConfig:
        """Resolve the run configuration, applying any --seed.

        :return: The resolved configuration.

        """
        return load_run_config(self.config_path, seed_overrides(self.seed))

    @abc.abstractmethod
    def run(self) -> int:
        """Run the command.

        :return: The command exit code.

        """

    def write_manifest(
        self,
        directory: pathlib.Path,
        config: RunConfig,
        artifacts: Mapping[str, pathlib.Path],
    ) -> RunManifest:
        """Write the run manifest into an artifact directory.

        :param directory: The artifact directory.
        :param config: The resolved configuration.
        :param artifacts: The artifact paths the run will write.
        :return: The written manifest.

        """
        manifest = RunManifest(
            subcommand=self.name,
            config=config,
            seed=config.training.seed,
            artifacts={name: str(path) for name, path in artifacts.items()},
        )

        manifest.write(directory)

        return manifest
