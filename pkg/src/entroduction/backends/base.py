"""Backend abstraction: anything that can produce one reasoning step.

A backend call returns exactly one sentence-level step together with the
log-probability evidence for every token in it. Implementations: an
OpenAI-compatible HTTP client, a fixture-playback backend, and a synthetic
backend that manufactures steps realizing a requested entropy schedule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from typing import Protocol, runtime_checkable

from ..metrics import TokenRecord

__all__ = [
    "BackendError",
    "TransportError",
    "ConfigurationError",
    "FinishReason",
    "GenerationRequest",
    "StepGeneration",
    "Backend",
    "DEFAULT_ANSWER_MARKER",
    "DEFAULT_SYSTEM_PROMPT",
    "detect_answer_marker",
    "load_template",
    "render_step_prompt",
    "render_conclusion_prompt",
]


class BackendError(Exception):
    """Base class for backend failures."""


class TransportError(BackendError):
    """Network-level failure that survived the retry budget."""


class ConfigurationError(BackendError):
    """Non-retryable setup problem (bad endpoint, missing logprob support)."""


class FinishReason(enum.Enum):
    STOP_SEQUENCE = "stop_sequence"
    LENGTH = "length"
    ANSWER_MARKER = "answer_marker"


DEFAULT_ANSWER_MARKER = "the answer is"
DEFAULT_SYSTEM_PROMPT = (
    "You are a careful reasoner. Work on the task one short step at a time."
)


@dataclass(frozen=True)
class GenerationRequest:
    """Inputs for one step generation."""

    system_prompt: str
    task: str
    prior_steps: tuple[str, ...] = ()
    temperature: float = 0.7
    max_tokens: int = 128
    top_logprobs: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "prior_steps", tuple(self.prior_steps))
        if self.temperature < 0.0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.top_logprobs < 0:
            raise ValueError("top_logprobs must be >= 0")


@dataclass(frozen=True)
class StepGeneration:
    """One generated step: its text, token evidence, and why it ended."""

    text: str
    tokens: tuple[TokenRecord, ...]
    finish_reason: FinishReason

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.text and not self.tokens:
            raise ValueError("non-empty text requires tokens")
        if self.tokens:
            joined = "".join(t.text for t in self.tokens)
            if joined != self.text:
                raise ValueError("token texts must concatenate to the step text")


@runtime_checkable
class Backend(Protocol):
    def generate_step(self, request: GenerationRequest) -> StepGeneration:
        """Produce the next reasoning step for the request's chain context."""
        ...


def detect_answer_marker(text: str, marker: str = DEFAULT_ANSWER_MARKER) -> str | None:
    """Trailing answer span after the last occurrence of ``marker``, if any.

    Matching is case-insensitive; the remainder is stripped of surrounding
    whitespace. Returns None when the marker is absent or has no remainder.
    """
    if not text or not marker:
        return None
    index = text.lower().rfind(marker.lower())
    if index < 0:
        return None
    remainder = text[index + len(marker):].strip()
    return remainder or None


def load_template(name: str) -> str:
    """Load a prompt template asset shipped with the package."""
    return (
        resources.files("entroduction.templates").joinpath(name).read_text("utf-8")
    )


def _format_steps(prior_steps: tuple[str, ...]) -> str:
    if not prior_steps:
        return "(none yet)"
    return "\n".join(f"{i + 1}. {step}" for i, step in enumerate(prior_steps))


def render_step_prompt(task: str, prior_steps: tuple[str, ...]) -> str:
    """User message asking for the next single reasoning step."""
    template = load_template("step_prompt.txt")
    return template.format(task=task, prior_steps=_format_steps(prior_steps))


def render_conclusion_prompt(task: str, prior_steps: tuple[str, ...]) -> str:
    """User message asking the chain to state its final answer."""
    template = load_template("conclusion_prompt.txt")
    return template.format(task=task, prior_steps=_format_steps(prior_steps))
