"""Shared behaviour for the typed configuration sections."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import dataclasses
from typing import Any, Dict, Type, TypeVar

# dmlm
from dmlm.errors import ConfigError

_T = TypeVar("_T", bound="ConfigSection")


# =============================================================================
# CLASSES
# =============================================================================


class ConfigSection:
    """Mixin for frozen dataclasses which map to a table of the config file.

    Subclasses implement validate() to check their invariants.

    """

    # The name of the config table the section is read from.
    section_name = ""

    def __post_init__(self) -> None:
        self.validate()

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_dict(cls: Type[_T], data: Dict[str, Any]) -> _T:
        """Build the section from a config table.

        :param data: The table data. Missing keys take the field defaults.
        :return: The constructed section.

        """
        fields = dataclasses.fields(cls)  # type: ignore[arg-type]
        names = {field.name for field in fields}

        unknown = sorted(set(data) - names)

        if unknown:
            raise ConfigError(
                f"Unknown key(s) in [{cls.section_name}]: {', '.join(unknown)}"
            )

        try:
            return cls(**data)

        except TypeError as inst:
            raise ConfigError(f"Invalid [{cls.section_name}] table: {inst}") from inst

    def replace(self: _T, **changes: Any) -> _T:
        """Get a copy with some fields changed.

        :param changes: The field values to change.
        :return: The new section.

        """
        return dataclasses.replace(self, **changes)  # type: ignore[type-var]

    def to_dict(self) -> Dict[str, Any]:
        """Get the section as a plain dictionary, every field materialized."""
        return dataclasses.asdict(self)  # type: ignore[call-overload]

    def validate(self) -> None:
        """Check the section's invariants, raising ConfigError on failure."""
