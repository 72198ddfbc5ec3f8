"""Token vocabulary built from a report corpus."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import collections
import json
import pathlib
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

# dmlm
from dmlm.errors import ContractViolationError, DegenerateInputError
from dmlm.reports.tokenize import UNK_ID, split_words
from dmlm.utils import atomic_write_text, canonical_hash

# =============================================================================
# GLOBALS
# =============================================================================

SPECIAL_TOKENS = ("<pad>", "<unk>", "<bos>", "<eos>")


# =============================================================================
# CLASSES
# =============================================================================


class Vocabulary:
    """A mapping between words and token ids.

    Ids 0-3 are reserved for padding, unknown, begin and end tokens.

    :param words: The non-special words, in id order.

    """

    def __init__(self, words: Sequence[str]) -> None:
        self._tokens: Tuple[str, ...] = SPECIAL_TOKENS + tuple(words)
        self._ids: Dict[str, int] = {
            token: index for index, token in enumerate(self._tokens)
        }

        if len(self._ids) != len(self._tokens):
            raise ContractViolationError("Vocabulary words must be unique")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented

        return self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    def __len__(self) -> int:
        return len(self._tokens)

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def digest(self) -> str:
        """SHA-256 digest of the token list."""
        return canonical_hash(list(self.tokens))

    @property
    def tokens(self) -> Tuple[str, ...]:
        """All tokens, in id order, specials included."""
        return self._tokens

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def encode(self, words: Iterable[str]) -> List[int]:
        """Map words to ids, unknown words mapping to the unknown id.

        :param words: The words to encode.
        :return: The token ids.

        """
        return [self._ids.get(word, UNK_ID) for word in words]

    @classmethod
    def load(cls, path: pathlib.Path) -> Vocabulary:
        """Load a vocabulary written by save().

        :param path: The file to read.
        :return: The vocabulary.

        """
        data = json.loads(path.read_text(encoding="utf-8"))

        tokens = data.get("tokens", [])

        if tuple(tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ContractViolationError(
                f"{path} does not start with the special tokens"
            )

        return cls(tokens[len(SPECIAL_TOKENS) :])

    def save(self, path: pathlib.Path) -> None:
        """Write the vocabulary as JSON.

        :param path: The file to write.
        :return:

        """
        data = {"digest": self.digest, "tokens": list(self.tokens)}

        atomic_write_text(path, json.dumps(data, indent=1))


# =============================================================================
# FUNCTIONS
# =============================================================================


def build_vocab(corpus: Iterable[str], max_size: Optional[int] = None) -> Vocabulary:
    """Build a vocabulary from a corpus of texts.

    Words are ordered by descending frequency, ties broken lexicographically.

    >>> build_vocab(["b a a"]).tokens[4:]
    ('a', 'b')

    :param corpus: The texts.
    :param max_size: Optional total size limit, specials included.
    :return: The vocabulary.

    """
    counts: collections.Counter = collections.Counter()
    documents = 0

    for text in corpus:
        documents += 1
        counts.update(split_words(text))

    if not documents:
        raise DegenerateInputError("Cannot build a vocabulary from an empty corpus")

    if max_size is not None and max_size < len(SPECIAL_TOKENS):
        raise ContractViolationError(f"max_size must be at least {len(SPECIAL_TOKENS)}")

    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    words = [word for word, _ in ranked]

    if max_size is not None:
        words = words[: max_size - len(SPECIAL_TOKENS)]

    return Vocabulary(words)
