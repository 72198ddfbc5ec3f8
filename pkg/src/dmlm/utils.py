"""This module contains utility functions."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
import hashlib
import json
import math
import os
import pathlib
import tempfile
from typing import Any, Union

# =============================================================================
# FUNCTIONS
# =============================================================================


def atomic_write_bytes(path: Union[str, pathlib.Path], data: bytes) -> None:
    """Write bytes to a file by writing a temp file and renaming it into place.

    Concurrent writers never leave a partially written file behind; the last
    rename wins.

    :param path: The destination path.
    :param data: The bytes to write.
    :return:

    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    handle, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")

    try:
        with os.fdopen(handle, "wb") as temp_file:
            temp_file.write(data)

        os.replace(temp_name, path)

    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)

        raise


def atomic_write_text(path: Union[str, pathlib.Path], text: str) -> None:
    """Write text to a file atomically, encoded as UTF-8.

    :param path: The destination path.
    :param text: The text to write.
    :return:

    """
    atomic_write_bytes(path, text.encode("utf-8"))


def canonical_json(data: Any) -> str:
    """Serialize data as JSON with sorted keys and no optional whitespace.

    >>> canonical_json({"b": 1, "a": [1, 2]})
    '{"a":[1,2],"b":1}'

    :param data: The JSON compatible data.
    :return: The canonical JSON string.

    """
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_hash(data: Any) -> str:
    """Compute a SHA-256 hex digest over the canonical JSON form of the data.

    The hash does not depend on dictionary key order.

    :param data: The JSON compatible data.
    :return: The hex digest.

    """
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def round_half_up(value: float) -> int:
    """Round a non-negative value to the nearest integer, halves rounding up.

    >>> round_half_up(2.5), round_half_up(2.4999), round_half_up(0.5)
    (3, 2, 1)

    :param value: The value to round.
    :return: The rounded integer.

    """
    return int(math.floor(value + 0.5))
