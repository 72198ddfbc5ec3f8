"""Template lexicon of disease definitions and radiographic characteristics."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import importlib.resources
import pathlib
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

# Third Party
import numpy as np
import toml

# dmlm
from dmlm.errors import ConfigError, ContractViolationError, LexiconMissError

# =============================================================================
# GLOBALS
# =============================================================================

_SYLLABLES = (
    "ba",
    "ce",
    "di",
    "fo",
    "gu",
    "ka",
    "le",
    "mi",
    "no",
    "pu",
    "ra",
    "si",
    "to",
    "vu",
    "ze",
)
_SUFFIXES = ("osis", "itis", "emia", "oma")
_TEXTURES = (
    "granular",
    "nodular",
    "reticular",
    "streaky",
    "patchy",
    "smooth",
    "mottled",
    "linear",
)
_PATTERNS = ("opacity", "lucency", "thickening", "shadowing", "density", "haziness")
_ZONES = ("apical", "basal", "central", "peripheral", "hilar", "subpleural")


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class LexiconEntry:
    """The template text for one disease."""

    name: str
    definition: str
    appearance: str


class Lexicon:
    """An ordered collection of disease entries.

    Lookups are case-insensitive.

    :param entries: The lexicon entries.

    """

    def __init__(self, entries: Sequence[LexiconEntry]) -> None:
        self._entries: Dict[str, LexiconEntry] = {}

        for entry in entries:
            key = _normalize(entry.name)

            if not key:
                raise ConfigError("Lexicon entries must have a name")

            if key in self._entries:
                raise ConfigError(f"Duplicate lexicon entry: {entry.name}")

            self._entries[key] = entry

    def __contains__(self, disease: object) -> bool:
        return isinstance(disease, str) and _normalize(disease) in self._entries

    def __iter__(self) -> Iterator[LexiconEntry]:
        return iter(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def diseases(self) -> Tuple[str, ...]:
        """The disease names, in lexicon order."""
        return tuple(entry.name for entry in self._entries.values())

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def default(cls) -> Lexicon:
        """Load the lexicon shipped with the package.

        :return: The default lexicon.

        """
        with importlib.resources.path("dmlm.reports", "lexicon.toml") as path:
            return cls.load(path)

    @classmethod
    def load(cls, path: pathlib.Path) -> Lexicon:
        """Load a lexicon from a toml file.

        :param path: The file to load.
        :return: The loaded lexicon.

        """
        with path.open("r", encoding="utf-8") as handle:
            data = toml.load(handle)

        entries = []

        for item in data.get("disease", []):
            try:
                entries.append(
                    LexiconEntry(
                        name=item["name"],
                        definition=" ".join(item["definition"].split()),
                        appearance=" ".join(item["appearance"].split()),
                    )
                )

            except KeyError as inst:
                raise ConfigError(
                    f"Lexicon entry in {path} is missing {inst}"
                ) from inst

        return cls(entries)

    def get(self, disease: str) -> LexiconEntry:
        """Get the entry for a disease.

        :param disease: The disease name.
        :return: The matching entry.

        """
        try:
            return self._entries[_normalize(disease)]

        except KeyError as inst:
            raise LexiconMissError(f"Disease not found in lexicon: {disease}") from inst

    def subset(self, count: int) -> Lexicon:
        """Get a lexicon holding the first entries.

        :param count: The number of entries to keep.
        :return: The smaller lexicon.

        """
        if not 0 < count <= len(self):
            raise ContractViolationError(
                f"Cannot take {count} entries from a lexicon of {len(self)}"
            )

        return Lexicon(list(self)[:count])

    def with_synthetic_entries(self, count: int, seed: int) -> Lexicon:
        """Extend the lexicon with generated placeholder diseases.

        Generated names and text are reproducible for a given seed.

        :param count: The number of entries to add.
        :param seed: The generation seed.
        :return: The extended lexicon.

        """
        rng = np.random.default_rng(seed)
        entries = list(self)
        names = set(self._entries)

        while len(entries) < len(self) + count:
            entry = _synthetic_entry(rng)

            if entry.name not in names:
                names.add(entry.name)
                entries.append(entry)

        return Lexicon(entries)


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _normalize(disease: str) -> str:
    """Normalize a disease name for lookups.

    :param disease: The disease name.
    :return: The lowercased name with collapsed whitespace.

    """
    return " ".join(disease.lower().split())


def _synthetic_entry(rng: np.random.Generator) -> LexiconEntry:
    """Generate a single placeholder lexicon entry.

    :param rng: The random generator to draw from.
    :return: The generated entry.

    """
    syllables: List[str] = list(rng.choice(_SYLLABLES, size=3))
    name = "".join(syllables) + str(rng.choice(_SUFFIXES))
    texture, second = rng.choice(_TEXTURES, size=2, replace=False)
    pattern = rng.choice(_PATTERNS)
    zone = rng.choice(_ZONES)

    definition = (
        f"{name.capitalize()} is a thoracic condition marked by {texture} change "
        f"of the {zone} lung tissue."
    )
    appearance = f"{second.capitalize()} {pattern} with a {zone} predominance."

    return LexiconEntry(name=name, definition=definition, appearance=appearance)
