"""Fixture-playback backend: replays recorded steps, byte for byte.

Fixtures are JSONL, one step per line:

    {"text": "...", "finish_reason": "stop_sequence",
     "tokens": [{"text": "...", "logprob": -0.3,
                 "top": [{"token": "...", "logprob": -0.3}, ...]}]}

``top`` may be null or omitted. Playback is strictly in file order and
mutation-free, so two runs over the same fixture are identical.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Iterable, Sequence

from ..metrics import TokenRecord
from .base import BackendError, FinishReason, GenerationRequest, StepGeneration

__all__ = ["ScriptedBackend", "load_fixture", "dump_fixture"]


def _token_from_json(obj: dict) -> TokenRecord:
    top = obj.get("top")
    alternatives = None
    if top:
        alternatives = tuple(
            sorted(
                ((str(item["token"]), float(item["logprob"])) for item in top),
                key=lambda pair: pair[1],
                reverse=True,
            )
        )
    return TokenRecord(
        text=str(obj["text"]),
        chosen_logprob=float(obj["logprob"]),
        top_alternatives=alternatives,
    )


def _token_to_json(token: TokenRecord) -> dict:
    top = None
    if token.top_alternatives is not None:
        top = [{"token": t, "logprob": lp} for t, lp in token.top_alternatives]
    return {"text": token.text, "logprob": token.chosen_logprob, "top": top}


def step_from_json(obj: dict) -> StepGeneration:
    return StepGeneration(
        text=str(obj["text"]),
        tokens=tuple(_token_from_json(t) for t in obj["tokens"]),
        finish_reason=FinishReason(obj["finish_reason"]),
    )


def step_to_json(step: StepGeneration) -> dict:
    return {
        "text": step.text,
        "finish_reason": step.finish_reason.value,
        "tokens": [_token_to_json(t) for t in step.tokens],
    }


def load_fixture(path: str | Path) -> list[StepGeneration]:
    steps = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                steps.append(step_from_json(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise BackendError(f"bad fixture line {line_number}: {exc}") from exc
    return steps


def dump_fixture(steps: Iterable[StepGeneration], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for step in steps:
            handle.write(json.dumps(step_to_json(step)) + "\n")


class ScriptedBackend:
    """Replays a recorded sequence of step generations in order.

    Playback position is shared across chains and guarded by a lock, so the
    backend is safe to call concurrently, though interleaving then follows
    call order.
    """

    def __init__(self, steps: Sequence[StepGeneration]):
        self._steps = list(steps)
        self._position = 0
        self._lock = threading.Lock()

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScriptedBackend":
        return cls(load_fixture(path))

    @property
    def calls_made(self) -> int:
        return self._position

    def remaining(self) -> int:
        return len(self._steps) - self._position

    def reset(self) -> None:
        with self._lock:
            self._position = 0

    def generate_step(self, request: GenerationRequest) -> StepGeneration:
        with self._lock:
            if self._position >= len(self._steps):
                raise BackendError(
                    f"fixture exhausted after {len(self._steps)} steps"
                )
            step = self._steps[self._position]
            self._position += 1
        if not step.tokens:
            raise BackendError("empty step")
        return step
