"""Prompt templates sent to a chat-completion endpoint to build report sections."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
from dataclasses import dataclass

# dmlm
from dmlm.errors import ContractViolationError

# =============================================================================
# GLOBALS
# =============================================================================

PLACEHOLDER = "[disease name]"


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt with a single disease name placeholder.

    :param name: The template name.
    :param template: The template text containing PLACEHOLDER exactly once.

    """

    name: str
    template: str

    def __post_init__(self) -> None:
        if self.template.count(PLACEHOLDER) != 1:
            raise ContractViolationError(
                f"Template {self.name!r} must contain {PLACEHOLDER!r} exactly once"
            )

    def render(self, disease: str) -> str:
        """Substitute the disease name into the template.

        The name is inserted literally, without any escaping.

        :param disease: The disease name.
        :return: The rendered prompt.

        """
        if not disease:
            raise ContractViolationError("The disease name must not be empty")

        return self.template.replace(PLACEHOLDER, disease)


DEFINITION_PROMPT = PromptTemplate(
    "definition",
    "Define [disease name]. Give me only a single paragraph and short definition of the disease.",
)

APPEARANCE_PROMPT = PromptTemplate(
    "appearance",
    "What are the distinguishing radiographic signs of [disease name] compared to other similar conditions?",
)


# =============================================================================
# FUNCTIONS
# =============================================================================


def render_appearance_prompt(disease: str) -> str:
    """Render the prompt asking for a disease's radiographic characteristics.

    >>> render_appearance_prompt("atelectasis")
    'What are the distinguishing radiographic signs of atelectasis compared to other similar conditions?'

    :param disease: The disease name.
    :return: The rendered prompt.

    """
    return APPEARANCE_PROMPT.render(disease)


def render_definition_prompt(disease: str) -> str:
    """Render the prompt asking for a short disease definition.

    >>> render_definition_prompt("atelectasis")
    'Define atelectasis. Give me only a single paragraph and short definition of the disease.'

    :param disease: The disease name.
    :return: The rendered prompt.

    """
    return DEFINITION_PROMPT.render(disease)
