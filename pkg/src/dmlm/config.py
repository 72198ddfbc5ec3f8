"""Loading of layered run configuration."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import copy
import dataclasses
import importlib.resources
import os
import pathlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

# Third Party
import deepmerge
import toml

# dmlm
from dmlm.datasets.synthetic import DatasetSpec
from dmlm.encoders import EncoderConfig
from dmlm.errors import ConfigError
from dmlm.evaluation.zero_shot import EvalConfig
from dmlm.reports.backends import ReportConfig
from dmlm.training.config import TrainingConfig
from dmlm.utils import canonical_hash

# Environment variable holding extra config files, os.pathsep separated.
CONFIG_PATH_ENV = "DMLM_CONFIG_PATH"

DEFAULT_PRESET = "desk"

# RunConfig attribute names mapped to their section types.
_SECTION_TYPES = {
    "encoder": EncoderConfig,
    "training": TrainingConfig,
    "dataset": DatasetSpec,
    "evaluation": EvalConfig,
    "reports": ReportConfig,
}


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class RunConfig:
    """The fully resolved configuration of a run.

    :param encoder: The encoder architecture.
    :param training: The optimization settings.
    :param dataset: The synthetic dataset settings.
    :param evaluation: The zero-shot evaluation settings.
    :param reports: The report generation settings.
    :param preset: The name of the preset the configuration was built on.

    """

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    reports: ReportConfig = field(default_factory=ReportConfig)
    preset: str = DEFAULT_PRESET

    def __post_init__(self) -> None:
        if self.encoder.patch_dim != self.dataset.patch_dim:
            raise ConfigError(
                "encoder.patch_dim and dataset.patch_dim must match, got "
                f"{self.encoder.patch_dim} and {self.dataset.patch_dim}"
            )

        if self.dataset.n_patches > self.encoder.max_patches:
            raise ConfigError(
                f"dataset grid has {self.dataset.n_patches} patches but "
                f"encoder.max_patches is {self.encoder.max_patches}"
            )

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> RunConfig:
        """Build the configuration from config data.

        Unknown top-level keys are ignored.

        :param data: The config data.
        :return: The constructed configuration.

        """
        sections = {}

        for attr, section_type in _SECTION_TYPES.items():
            table = data.get(section_type.section_name, {})

            if not isinstance(table, dict):
                raise ConfigError(f"[{section_type.section_name}] must be a table")

            sections[attr] = section_type.from_dict(table)

        return cls(preset=str(data.get("preset", DEFAULT_PRESET)), **sections)

    def config_hash(self) -> str:
        """Get the SHA-256 of the canonical form of the configuration."""
        return canonical_hash(self.to_dict())

    def replace(self, **changes: Any) -> RunConfig:
        """Get a copy with some sections changed.

        :param changes: The sections to change, keyed by attribute name.
        :return: The new configuration.

        """
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """Get the configuration as config data with every field materialized.

        :return: The config tables keyed by section name.

        """
        data: Dict[str, Any] = {"preset": self.preset}

        for attr in _SECTION_TYPES:
            section = getattr(self, attr)
            data[section.section_name] = section.to_dict()

        return data


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _find_config_files() -> List[pathlib.Path]:
    """Find any extra config files listed in DMLM_CONFIG_PATH.

    Entries which do not exist are skipped.

    :return: The config files, highest precedence first.

    """
    path_env = os.getenv(CONFIG_PATH_ENV)

    if not path_env:
        return []

    path_components = path_env.split(os.path.pathsep)

    return [
        pathlib.Path(component)
        for component in path_components
        if component and os.path.exists(component)
    ]


def _load_toml(path: pathlib.Path) -> Dict[str, Any]:
    """Load a TOML document.

    :param path: The file to load.
    :return: The document data.

    """
    try:
        with path.open("r", encoding="utf-8") as handle:
            return toml.load(handle)

    except toml.TomlDecodeError as inst:
        raise ConfigError(f"Could not parse {path}: {inst}") from inst


# =============================================================================
# FUNCTIONS
# =============================================================================


def load_default_data() -> Dict[str, Any]:
    """Load the packaged defaults, presets included.

    :return: The packaged config data.

    """
    with importlib.resources.path("dmlm", "defaults.toml") as path:
        return _load_toml(path)


def load_run_config(
    path: Optional[Union[str, pathlib.Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Load the configuration of a run.

    Layers, lowest precedence first: the packaged defaults, files listed in
    DMLM_CONFIG_PATH, the selected preset, the user file, then any overrides.

    :param path: An optional user config file.
    :param overrides: Optional config data which takes precedence over everything.
    :return: The resolved configuration.

    """
    data: Dict[str, Any] = {}

    # Merges keep values already present, so layers are added highest first.
    if overrides:
        deepmerge.conservative_merger.merge(data, copy.deepcopy(overrides))

    if path is not None:
        deepmerge.conservative_merger.merge(data, _load_toml(pathlib.Path(path)))

    env_data: Dict[str, Any] = {}

    for env_path in _find_config_files():
        deepmerge.conservative_merger.merge(env_data, _load_toml(env_path))

    defaults = load_default_data()
    presets = defaults.pop("presets", {})

    preset = data.get("preset", env_data.get("preset", defaults.get("preset")))

    if preset not in presets:
        raise ConfigError(
            f"Unknown preset {preset!r}, expected one of {', '.join(sorted(presets))}"
        )

    deepmerge.conservative_merger.merge(data, copy.deepcopy(presets[preset]))
    deepmerge.conservative_merger.merge(data, env_data)
    deepmerge.conservative_merger.merge(data, defaults)

    data["preset"] = preset

    return RunConfig.from_dict(data)


def seed_overrides(seed: Optional[int]) -> Dict[str, Any]:
    """Build the overrides applying a --seed option.

    >>> seed_overrides(3)
    {'dataset': {'seed': 3}, 'training': {'seed': 3}}
    >>> seed_overrides(None)
    {}

    :param seed: The seed, or None to keep the configured ones.
    :return: Config data setting every seed.

    """
    if seed is None:
        return {}

    return {"dataset": {"seed": seed}, "training": {"seed": seed}}
