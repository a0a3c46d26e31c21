"""HTTP backend for OpenAI-compatible chat-completions endpoints.

Sends one chat-completions request per reasoning step with logprobs enabled
and parses the per-token log-probability payload into token records. Network
failures and 5xx responses are retried with bounded exponential backoff; a
response without logprob content is a fatal configuration error because the
whole method depends on it.
"""

from __future__ import annotations

import os
import threading
import time
from typing import Sequence

import requests

from ..metrics import TokenRecord
from .base import (
    ConfigurationError,
    BackendError,
    FinishReason,
    GenerationRequest,
    StepGeneration,
    TransportError,
    detect_answer_marker,
    render_step_prompt,
)

__all__ = ["OpenAIChatBackend"]

ENDPOINT_ENV = "ENTRODUCTION_ENDPOINT"
API_KEY_ENV = "ENTRODUCTION_API_KEY"
FALLBACK_ENDPOINT_ENV = "OPENAI_BASE_URL"
FALLBACK_API_KEY_ENV = "OPENAI_API_KEY"

DEFAULT_STOP_SEQUENCES = ("\n",)
DEFAULT_TIMEOUT = 30.0
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_MAX_IN_FLIGHT = 4


class OpenAIChatBackend:
    """Chat-completions client that returns token-level logprob evidence.

    ``endpoint`` is the API base (".../v1") or a full chat-completions URL.
    In-flight requests are bounded by a semaphore so many chains can share
    one backend safely.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        stop_sequences: Sequence[str] = DEFAULT_STOP_SEQUENCES,
        timeout: float = DEFAULT_TIMEOUT,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        retry_backoff: float = 0.5,
        session: requests.Session | None = None,
    ):
        if not endpoint:
            raise ConfigurationError("endpoint is required")
        if not model:
            raise ConfigurationError("model is required")
        self._url = self._completions_url(endpoint)
        self._model = model
        self._api_key = api_key
        self._stop = list(stop_sequences)
        self._timeout = timeout
        self._max_attempts = max(1, max_attempts)
        self._retry_backoff = retry_backoff
        self._session = session or requests.Session()
        self._in_flight = threading.BoundedSemaphore(max_in_flight)

    @staticmethod
    def _completions_url(endpoint: str) -> str:
        trimmed = endpoint.rstrip("/")
        if trimmed.endswith("/chat/completions"):
            return trimmed
        return trimmed + "/chat/completions"

    @classmethod
    def from_env(cls, model: str, **kwargs) -> "OpenAIChatBackend":
        endpoint = os.environ.get(ENDPOINT_ENV) or os.environ.get(FALLBACK_ENDPOINT_ENV)
        if not endpoint:
            raise ConfigurationError(
                f"no endpoint configured; set {ENDPOINT_ENV} or {FALLBACK_ENDPOINT_ENV}"
            )
        api_key = os.environ.get(API_KEY_ENV) or os.environ.get(FALLBACK_API_KEY_ENV)
        return cls(endpoint=endpoint, model=model, api_key=api_key, **kwargs)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def _payload(self, request: GenerationRequest) -> dict:
        return {
            "model": self._model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {
                    "role": "user",
                    "content": render_step_prompt(request.task, request.prior_steps),
                },
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "logprobs": True,
            "top_logprobs": request.top_logprobs,
            "stop": list(self._stop),
        }

    def _post(self, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(1, self._max_attempts + 1):
            try:
                with self._in_flight:
                    response = self._session.post(
                        self._url,
                        json=payload,
                        headers=self._headers(),
                        timeout=self._timeout,
                    )
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code < 500:
                    if response.status_code >= 400:
                        raise ConfigurationError(
                            f"endpoint rejected request ({response.status_code}): "
                            f"{response.text[:500]}"
                        )
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise BackendError(f"bad JSON from endpoint: {exc}") from exc
                last_error = TransportError(
                    f"server error {response.status_code}: {response.text[:200]}"
                )
            if attempt < self._max_attempts:
                time.sleep(self._retry_backoff * (2 ** (attempt - 1)))
        raise TransportError(
            f"endpoint unreachable after {self._max_attempts} attempts: {last_error}"
        )

    @staticmethod
    def _parse_tokens(content: list) -> tuple[TokenRecord, ...]:
        records = []
        for item in content:
            alternatives = None
            top = item.get("top_logprobs")
            if top:
                alternatives = tuple(
                    sorted(
                        (
                            (str(alt["token"]), min(0.0, float(alt["logprob"])))
                            for alt in top
                        ),
                        key=lambda pair: pair[1],
                        reverse=True,
                    )
                )
            records.append(
                TokenRecord(
                    text=str(item["token"]),
                    chosen_logprob=min(0.0, float(item["logprob"])),
                    top_alternatives=alternatives,
                )
            )
        return tuple(records)

    def generate_step(self, request: GenerationRequest) -> StepGeneration:
        data = self._post(self._payload(request))
        try:
            choice = data["choices"][0]
        except (KeyError, IndexError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc

        logprobs = choice.get("logprobs")
        if not logprobs or not logprobs.get("content"):
            raise ConfigurationError("logprobs unavailable")
        tokens = self._parse_tokens(logprobs["content"])
        if not tokens:
            raise BackendError("empty step")

        # The token texts are authoritative: stop-sequence trimming can make
        # message.content disagree with the logprob stream.
        text = "".join(t.text for t in tokens)
        if not text.strip():
            raise BackendError("empty step")

        if detect_answer_marker(text):
            finish = FinishReason.ANSWER_MARKER
        elif choice.get("finish_reason") == "length":
            finish = FinishReason.LENGTH
        else:
            finish = FinishReason.STOP_SEQUENCE
        return StepGeneration(text=text, tokens=tokens, finish_reason=finish)
