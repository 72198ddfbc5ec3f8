"""Run manifests recording how an artifact directory was produced."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import pathlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

# Third Party
import toml

# dmlm
from dmlm.config import RunConfig
from dmlm.errors import ConfigError
from dmlm.utils import atomic_write_text

MANIFEST_FILE = "manifest.toml"


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class RunManifest:
    """The record of a single subcommand invocation.

    The manifest is itself a valid config file: the resolved config tables sit at
    the top level and the run details sit in keys the config loader ignores.

    :param subcommand: The subcommand which ran.
    :param config: The resolved configuration.
    :param seed: The seed the run used.
    :param artifacts: Output paths keyed by artifact name.

    """

    subcommand: str
    config: RunConfig
    seed: int
    artifacts: Dict[str, str] = field(default_factory=dict)

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def config_hash(self) -> str:
        """The hash of the resolved configuration."""
        return self.config.config_hash()

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunManifest:
        """Build a manifest from its document data.

        :param data: The manifest document.
        :return: The manifest.

        """
        try:
            subcommand = data["subcommand"]
            seed = data["seed"]

        except KeyError as inst:
            raise ConfigError(f"Manifest is missing the {inst.args[0]!r} key") from inst

        manifest = cls(
            subcommand=subcommand,
            config=RunConfig.from_dict(data),
            seed=int(seed),
            artifacts=dict(data.get("artifacts", {})),
        )

        stored_hash = data.get("config_hash")

        if stored_hash is not None and stored_hash != manifest.config_hash:
            raise ConfigError("Manifest config_hash does not match its config tables")

        return manifest

    def to_dict(self) -> Dict[str, Any]:
        """Get the manifest document data."""
        data = self.config.to_dict()

        data.update(
            subcommand=self.subcommand,
            seed=self.seed,
            config_hash=self.config_hash,
            artifacts=dict(sorted(self.artifacts.items())),
        )

        return data

    def write(self, directory: pathlib.Path) -> pathlib.Path:
        """Write the manifest into a directory.

        :param directory: The artifact directory.
        :return: The written file.

        """
        directory.mkdir(parents=True, exist_ok=True)

        path = directory / MANIFEST_FILE

        atomic_write_text(path, toml.dumps(self.to_dict()))

        return path


# =============================================================================
# FUNCTIONS
# =============================================================================


def read_manifest(path: pathlib.Path, subcommand: Optional[str] = None) -> RunManifest:
    """Read a manifest file.

    :param path: The manifest file, or the directory holding it.
    :param subcommand: The subcommand the manifest is expected to describe.
    :return: The manifest.

    """
    if path.is_dir():
        path = path / MANIFEST_FILE

    if not path.exists():
        raise FileNotFoundError(f"No manifest found at {path}")

    try:
        manifest = RunManifest.from_dict(toml.loads(path.read_text(encoding="utf-8")))

    except toml.TomlDecodeError as inst:
        raise ConfigError(f"Could not parse {path}: {inst}") from inst

    if subcommand is not None and manifest.subcommand != subcommand:
        raise ConfigError(
            f"{path} describes a {manifest.subcommand!r} run, not {subcommand!r}"
        )

    return manifest
