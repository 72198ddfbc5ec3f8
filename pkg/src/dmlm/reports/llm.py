"""Minimal chat-completion client and an on-disk response cache."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import json
import logging
import os
import pathlib
import urllib.error
import urllib.request
from typing import Optional, Union

# dmlm
from dmlm.errors import LLMEndpointError
from dmlm.utils import atomic_write_text, canonical_hash, canonical_json

_logger = logging.getLogger(__name__)

# =============================================================================
# GLOBALS
# =============================================================================

DEFAULT_MODEL = "gpt-4"
DEFAULT_TIMEOUT = 30.0


# =============================================================================
# CLASSES
# =============================================================================


class ChatCompletionClient:
    """Send single-message prompts to an OpenAI-compatible chat-completion endpoint.

    :param endpoint: The endpoint URL.
    :param token: Optional bearer token.
    :param model: The model name to request.
    :param timeout: The request timeout, in seconds.

    """

    def __init__(
        self,
        endpoint: str,
        token: Optional[str] = None,
        model: str = DEFAULT_MODEL,
        timeout: float = DEFAULT_TIMEOUT,
    ) -> None:
        self._endpoint = endpoint
        self._token = token
        self._model = model
        self._timeout = timeout

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def endpoint(self) -> str:
        """The endpoint URL."""
        return self._endpoint

    @property
    def model(self) -> str:
        """The requested model name."""
        return self._model

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    @classmethod
    def from_environment(
        cls, model: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT
    ) -> Optional[ChatCompletionClient]:
        """Build a client from DMLM_LLM_ENDPOINT, DMLM_LLM_TOKEN and DMLM_LLM_MODEL.

        :param model: Optional model name overriding DMLM_LLM_MODEL.
        :param timeout: The request timeout, in seconds.
        :return: A client, or None if no endpoint is configured.

        """
        endpoint = os.getenv("DMLM_LLM_ENDPOINT")

        if not endpoint:
            return None

        return cls(
            endpoint,
            token=os.getenv("DMLM_LLM_TOKEN"),
            model=model or os.getenv("DMLM_LLM_MODEL", DEFAULT_MODEL),
            timeout=timeout,
        )

    def complete(self, prompt: str) -> str:
        """Send a prompt and return the reply text.

        :param prompt: The user message.
        :return: The content of the first choice.

        """
        body = json.dumps(
            {"model": self.model, "messages": [{"role": "user", "content": prompt}]}
        ).encode("utf-8")

        headers = {"Content-Type": "application/json"}

        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"

        request = urllib.request.Request(
            self.endpoint, data=body, headers=headers, method="POST"
        )

        _logger.debug("Requesting completion from %s", self.endpoint)

        try:
            with urllib.request.urlopen(request, timeout=self._timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))

        except (urllib.error.URLError, OSError) as inst:
            raise LLMEndpointError(
                f"Request to {self.endpoint} failed: {inst}"
            ) from inst

        except ValueError as inst:
            raise LLMEndpointError(f"Invalid JSON from {self.endpoint}") from inst

        try:
            content = payload["choices"][0]["message"]["content"]

        except (KeyError, IndexError, TypeError) as inst:
            raise LLMEndpointError(
                f"Unexpected response shape from {self.endpoint}"
            ) from inst

        if not isinstance(content, str):
            raise LLMEndpointError(f"Unexpected response content from {self.endpoint}")

        return content


class ResponseCache:
    """Cache endpoint responses on disk, keyed by prompt and model.

    :param directory: The cache directory.

    """

    def __init__(self, directory: Union[str, pathlib.Path]) -> None:
        self._directory = pathlib.Path(directory)

    # -------------------------------------------------------------------------
    # PROPERTIES
    # -------------------------------------------------------------------------

    @property
    def directory(self) -> pathlib.Path:
        """The cache directory."""
        return self._directory

    # -------------------------------------------------------------------------
    # NON-PUBLIC METHODS
    # -------------------------------------------------------------------------

    def _path_for(self, prompt: str, model: str) -> pathlib.Path:
        """Get the cache file for a prompt.

        :param prompt: The prompt.
        :param model: The model name.
        :return: The cache file path.

        """
        digest = canonical_hash({"model": model, "prompt": prompt})

        return self.directory / f"{digest}.json"

    # -------------------------------------------------------------------------
    # METHODS
    # -------------------------------------------------------------------------

    def get(self, prompt: str, model: str) -> Optional[str]:
        """Look up a cached response.

        Unreadable entries are treated as misses.

        :param prompt: The prompt.
        :param model: The model name.
        :return: The cached response, if any.

        """
        path = self._path_for(prompt, model)

        if not path.is_file():
            return None

        try:
            data = json.loads(path.read_text(encoding="utf-8"))

        except ValueError:
            _logger.warning("Ignoring corrupt cache entry %s", path)
            return None

        response = data.get("response") if isinstance(data, dict) else None

        return response if isinstance(response, str) else None

    def put(self, prompt: str, model: str, response: str) -> None:
        """Store a response.

        :param prompt: The prompt.
        :param model: The model name.
        :param response: The response text.
        :return:

        """
        atomic_write_text(
            self._path_for(prompt, model),
            canonical_json({"model": model, "prompt": prompt, "response": response}),
        )
