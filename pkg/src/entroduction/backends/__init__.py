"""Model backends: HTTP, fixture playback, and synthetic entropy schedules."""

from .base import (
    Backend,
    BackendError,
    ConfigurationError,
    DEFAULT_ANSWER_MARKER,
    DEFAULT_SYSTEM_PROMPT,
    FinishReason,
    GenerationRequest,
    StepGeneration,
    TransportError,
    detect_answer_marker,
    render_conclusion_prompt,
    render_step_prompt,
)
from .openai_http import OpenAIChatBackend
from .scripted import ScriptedBackend, dump_fixture, load_fixture
from .synthetic import SyntheticBackend, SyntheticStep, logits_for_normalized_entropy

__all__ = [
    "Backend",
    "BackendError",
    "ConfigurationError",
    "TransportError",
    "FinishReason",
    "GenerationRequest",
    "StepGeneration",
    "DEFAULT_ANSWER_MARKER",
    "DEFAULT_SYSTEM_PROMPT",
    "detect_answer_marker",
    "render_step_prompt",
    "render_conclusion_prompt",
    "OpenAIChatBackend",
    "ScriptedBackend",
    "load_fixture",
    "dump_fixture",
    "SyntheticBackend",
    "SyntheticStep",
    "logits_for_normalized_entropy",
]
