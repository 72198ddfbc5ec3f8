"""Report generation backends.

A backend supplies the definition and radiographic characteristics sections
of a report; the observations and verdicts come from the sample's findings
and disease.

"""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import abc
import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence

# dmlm
from dmlm.errors import ConfigError, ContractViolationError, LLMEndpointError
from dmlm.reports.lexicon import Lexicon
from dmlm.reports.llm import (
    DEFAULT_MODEL,
    DEFAULT_TIMEOUT,
    ChatCompletionClient,
    ResponseCache,
)
from dmlm.reports.prompts import render_appearance_prompt, render_definition_prompt
from dmlm.reports.report import APPEARANCE_PREFIX, DEFINITION_PREFIX, StructuredReport
from dmlm.schema import ConfigSection

_logger = logging.getLogger(__name__)

# =============================================================================
# GLOBALS
# =============================================================================

BACKEND_NAMES = ("template", "llm")

NO_FINDINGS_OBSERVATION = "Observation: no additional findings."


# =============================================================================
# CLASSES
# =============================================================================


@dataclass(frozen=True)
class ReportConfig(ConfigSection):
    """Report generation settings."""

    section_name = "reports"

    backend: str = "template"
    lexicon_path: str = ""
    llm_model: str = ""
    llm_timeout: float = DEFAULT_TIMEOUT
    llm_retries: int = 1
    cache_dir: str = ""

    def validate(self) -> None:
        if self.backend not in BACKEND_NAMES:
            raise ConfigError(
                f"reports.backend must be one of {', '.join(BACKEND_NAMES)}, "
                f"got {self.backend!r}"
            )

        if self.llm_timeout <= 0:
            raise ConfigError("reports.llm_timeout must be positive")

        if self.llm_retries < 0:
            raise ConfigError("reports.llm_retries must not be negative")


class BaseReportBackend(abc.ABC):
    """Base class for report section generators."""

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    @abc.abstractmethod
    def name(self) -> str:
        """The backend name."""

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @abc.abstractmethod
    def appearance(self, disease: str) -> str:
        """Get the radiographic characteristics of a disease.

        :param disease: The disease name.
        :return: The section text, without its prefix.

        """

    @abc.abstractmethod
    def definition(self, disease: str) -> str:
        """Get the definition of a disease.

        :param disease: The disease name.
        :return: The section text, without its prefix.

        """


class TemplateReportBackend(BaseReportBackend):
    """Fill report sections from a lexicon.

    :param lexicon: The lexicon to read from.

    """

    def __init__(self, lexicon: Lexicon) -> None:
        self._lexicon = lexicon

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def lexicon(self) -> Lexicon:
        """The backing lexicon."""
        return self._lexicon

    @property
    def name(self) -> str:
        """The backend name."""
        return "template"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def appearance(self, disease: str) -> str:
        """Get the radiographic characteristics of a disease.

        :param disease: The disease name.
        :return: The section text, without its prefix.

        """
        return self.lexicon.get(disease).appearance

    def definition(self, disease: str) -> str:
        """Get the definition of a disease.

        :param disease: The disease name.
        :return: The section text, without its prefix.

        """
        return self.lexicon.get(disease).definition


class LLMReportBackend(BaseReportBackend):
    """Fill report sections by prompting a chat-completion endpoint.

    Responses must start with the section prefix ("Definition:" or
    "Radiographic characteristics:"). A failed or malformed response is
    retried, then the section falls back to the template backend and a
    warning is recorded.

    :param client: The endpoint client, or None when no endpoint is configured.
    :param fallback: The template backend to fall back to.
    :param retries: The number of retries after a failed request.
    :param cache: Optional response cache.

    """

    def __init__(
        self,
        client: Optional[ChatCompletionClient],
        fallback: TemplateReportBackend,
        retries: int = 1,
        cache: Optional[ResponseCache] = None,
    ) -> None:
        self._client = client
        self._fallback = fallback
        self._retries = retries
        self._cache = cache
        self._warnings: List[str] = []

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def name(self) -> str:
        """The backend name."""
        return "llm"

    @property
    def warnings(self) -> List[str]:
        """Warnings recorded for sections which fell back to the template."""
        return self._warnings

    # -------------------------------------------------------------------------
    # NON-PUBLIC METHODS
    # -------------------------------------------------------------------------

    def _ask(self, prompt: str, prefix: str) -> Optional[str]:
        """Prompt the endpoint for a section.

        :param prompt: The rendered prompt.
        :param prefix: The prefix the response must start with.
        :return: The section text without its prefix, or None on failure.

        """
        if self._client is None:
            self._warn("No chat-completion endpoint is configured")
            return None

        model = self._client.model

        if self._cache is not None:
            cached = self._cache.get(prompt, model)

            if cached is not None:
                content = _strip_prefix(cached, prefix)

                if content:
                    return content

        problem = ""

        for attempt in range(self._retries + 1):
            try:
                response = self._client.complete(prompt)

            except LLMEndpointError as inst:
                problem = str(inst)
                _logger.debug("Attempt %s failed: %s", attempt + 1, problem)
                continue

            content = _strip_prefix(response, prefix)

            if content:
                if self._cache is not None:
                    self._cache.put(prompt, model, response)

                return content

            problem = f"Response did not start with {prefix!r}"
            _logger.debug("Attempt %s failed: %s", attempt + 1, problem)

        self._warn(problem)

        return None

    def _warn(self, problem: str) -> None:
        """Record a fallback warning.

        :param problem: The reason for falling back.
        :return:

        """
        message = f"{problem}; using template text"

        _logger.warning(message)
        self._warnings.append(message)

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def appearance(self, disease: str) -> str:
        """Get the radiographic characteristics of a disease.

        :param disease: The disease name.
        :return: The section text, without its prefix.

        """
        content = self._ask(render_appearance_prompt(disease), APPEARANCE_PREFIX)

        return content if content is not None else self._fallback.appearance(disease)

    def definition(self, disease: str) -> str:
        """Get the definition of a disease.

        :param disease: The disease name.
        :return: The section text, without its prefix.

        """
        content = self._ask(render_definition_prompt(disease), DEFINITION_PREFIX)

        return content if content is not None else self._fallback.definition(disease)


# =============================================================================
# NON-PUBLIC FUNCTIONS
# =============================================================================


def _collapse(text: str) -> str:
    """Collapse runs of whitespace, including newlines, to single spaces.

    :param text: The text to collapse.
    :return: The collapsed text.

    """
    return " ".join(text.split())


def _strip_prefix(response: str, prefix: str) -> str:
    """Remove a required prefix from a response.

    :param response: The raw response.
    :param prefix: The required prefix.
    :return: The remaining text, or an empty string if the prefix is missing.

    """
    text = _collapse(response)

    if not text.startswith(prefix):
        return ""

    return text[len(prefix) :].strip()


# =============================================================================
# FUNCTIONS
# =============================================================================


def build_backend(config: ReportConfig, lexicon: Lexicon) -> BaseReportBackend:
    """Build the backend selected by a report configuration.

    :param config: The report configuration.
    :param lexicon: The lexicon used by the template backend and for fallbacks.
    :return: The report backend.

    """
    template = TemplateReportBackend(lexicon)

    if config.backend == "template":
        return template

    client = ChatCompletionClient.from_environment(
        model=config.llm_model or None, timeout=config.llm_timeout
    )

    cache_dir = config.cache_dir or os.getenv("DMLM_LLM_CACHE")
    cache = ResponseCache(cache_dir) if cache_dir else None

    return LLMReportBackend(client, template, retries=config.llm_retries, cache=cache)


def format_observation(finding: str) -> str:
    """Render a finding as an observation line.

    >>> format_observation("  upper left   opacity ")
    'Observation: upper left opacity.'

    :param finding: The finding text.
    :return: The observation line.

    """
    text = _collapse(finding).rstrip(".")

    if not text:
        raise ContractViolationError("Findings must not be empty")

    return f"Observation: {text}."


def format_verdict(disease: str) -> str:
    """Render the verdict line for a disease.

    >>> format_verdict("atelectasis")
    'Verdict: atelectasis present.'

    :param disease: The disease name.
    :return: The verdict line.

    """
    return f"Verdict: {_collapse(disease)} present."


def generate_report(
    disease: str, findings: Sequence[str], backend: BaseReportBackend
) -> StructuredReport:
    """Generate a structured report.

    With no findings the observations section holds a single
    "no additional findings" line.

    :param disease: The disease name.
    :param findings: The sample's findings.
    :param backend: The backend supplying the definition and appearance.
    :return: The report.

    """
    if not disease.strip():
        raise ContractViolationError("The disease name must not be empty")

    observations = tuple(format_observation(finding) for finding in findings) or (
        NO_FINDINGS_OBSERVATION,
    )

    report = StructuredReport(
        disease=disease,
        definition=_collapse(backend.definition(disease)),
        appearance=_collapse(backend.appearance(disease)),
        observations=observations,
        verdicts=(format_verdict(disease),),
    )

    report.validate()

    return report
