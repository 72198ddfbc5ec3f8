"""Test the dmlm.schema module."""

# =============================================================================
# IMPORTS
# =============================================================================

# Standard Library
from dataclasses import dataclass

# Third Party
import pytest

# dmlm
import dmlm.errors
import dmlm.schema

# =============================================================================
# GLOBALS
# =============================================================================


@dataclass(frozen=True)
class _Section(dmlm.schema.ConfigSection):
    section_name = "example"

    size: int = 1
    name: str = "a"

    def validate(self):
        if self.size < 1:
            raise dmlm.errors.ConfigError("example.size must be positive")


# =============================================================================
# TESTS
# =============================================================================


class TestConfigSection:
    """Test dmlm.schema.ConfigSection."""

    def test___post_init__(self):
        """Test that construction validates."""
        with pytest.raises(dmlm.errors.ConfigError, match="example.size"):
            _Section(size=0)

    # Methods

    def test_from_dict(self):
        """Test ConfigSection.from_dict."""
        result = _Section.from_dict({"size": 3})

        assert result == _Section(size=3, name="a")

    def test_from_dict__unknown_keys(self):
        """Test ConfigSection.from_dict with keys which are not fields."""
        with pytest.raises(dmlm.errors.ConfigError, match=r"\[example\]: bogus, other"):
            _Section.from_dict({"other": 1, "bogus": 2})

    def test_replace(self):
        """Test ConfigSection.replace."""
        inst = _Section()

        result = inst.replace(name="b")

        assert result == _Section(name="b")
        assert inst.name == "a"

    def test_replace__validates(self):
        """Test ConfigSection.replace re-validates the copy."""
        with pytest.raises(dmlm.errors.ConfigError):
            _Section().replace(size=-1)

    def test_to_dict(self):
        """Test ConfigSection.to_dict."""
        assert _Section(size=2).to_dict() == {"size": 2, "name": "a"}
