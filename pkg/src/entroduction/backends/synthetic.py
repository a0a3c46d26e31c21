"""Synthetic backend: manufactures steps with controlled entropy.

Each schedule entry either gives explicit per-token log-probability values or
a target normalized step entropy that is realized by solving a one-hot logit
family with bisection. The entry used for a call is chosen by how many prior
steps the request carries, so two chains at the same depth see the same
schedule entry and every formula and control path becomes reproducible
without a model.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..metrics import TokenRecord, step_entropy, step_softmax
from .base import (
    DEFAULT_ANSWER_MARKER,
    FinishReason,
    GenerationRequest,
    StepGeneration,
    detect_answer_marker,
)

__all__ = ["SyntheticStep", "SyntheticBackend", "logits_for_normalized_entropy"]


def logits_for_normalized_entropy(
    target: float, n_tokens: int, tolerance: float = 1e-9
) -> tuple[float, ...]:
    """Logit vector of length ``n_tokens`` whose softmax entropy, divided by
    log2(n), hits ``target``.

    Uses the family [a, 0, ..., 0]: a = 0 is uniform (normalized entropy 1)
    and the entropy falls monotonically to 0 as ``a`` grows, so bisection
    converges to float precision.
    """
    if n_tokens < 2:
        raise ValueError("need at least two tokens to target an entropy")
    if not 0.0 < target <= 1.0:
        raise ValueError("target normalized entropy must be in (0, 1]")
    if target == 1.0:
        return (0.0,) * n_tokens

    max_entropy = math.log2(n_tokens)

    def normalized(a: float) -> float:
        logits = np.zeros(n_tokens)
        logits[0] = a
        return step_entropy(step_softmax(logits)) / max_entropy

    lo, hi = 0.0, 1.0
    while normalized(hi) > target:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(f"cannot realize normalized entropy {target}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if normalized(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tolerance * max(1.0, hi):
            break
    a = 0.5 * (lo + hi)
    logits = [0.0] * n_tokens
    logits[0] = a
    return tuple(logits)


@dataclass(frozen=True)
class SyntheticStep:
    """One schedule entry: explicit logprobs or an entropy target."""

    logprobs: tuple[float, ...] | None = None
    target_normalized_entropy: float | None = None
    n_tokens: int = 8
    text: str | None = None

    def __post_init__(self) -> None:
        if (self.logprobs is None) == (self.target_normalized_entropy is None):
            raise ValueError(
                "give exactly one of logprobs or target_normalized_entropy"
            )
        if self.logprobs is not None:
            object.__setattr__(self, "logprobs", tuple(float(v) for v in self.logprobs))


def _chunk_text(text: str, n: int) -> list[str]:
    """Split ``text`` into exactly ``n`` non-empty pieces that concatenate back."""
    if len(text) < n:
        text = text + " " * (n - len(text))
    base, extra = divmod(len(text), n)
    pieces = []
    offset = 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        pieces.append(text[offset : offset + size])
        offset += size
    return pieces


class SyntheticBackend:
    """Builds steps whose measured entropies follow a schedule.

    The schedule entry for a call is ``schedule[len(prior_steps)]``; calls
    past the end reuse the final entry, so runs of any length are served.
    """

    def __init__(self, schedule: Sequence[SyntheticStep]):
        if not schedule:
            raise ValueError("schedule must be non-empty")
        self._schedule = list(schedule)
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def calls_made(self) -> int:
        return self._calls

    def generate_step(self, request: GenerationRequest) -> StepGeneration:
        with self._lock:
            self._calls += 1
        index = min(len(request.prior_steps), len(self._schedule) - 1)
        entry = self._schedule[index]

        if entry.logprobs is not None:
            raw = np.asarray(entry.logprobs, dtype=np.float64)
        else:
            raw = np.asarray(
                logits_for_normalized_entropy(
                    entry.target_normalized_entropy, entry.n_tokens
                )
            )
        # Shift to proper logprobs (<= 0); metrics are shift-invariant.
        shifted = raw - raw.max()
        logprobs = shifted - math.log(float(np.exp(shifted).sum()))

        text = entry.text or f"synthetic step {index + 1} of the reasoning schedule."
        pieces = _chunk_text(text, len(logprobs))
        tokens = tuple(
            TokenRecord(text=piece, chosen_logprob=min(0.0, float(lp)))
            for piece, lp in zip(pieces, logprobs)
        )
        finish = (
            FinishReason.ANSWER_MARKER
            if detect_answer_marker(text, DEFAULT_ANSWER_MARKER)
            else FinishReason.STOP_SEQUENCE
        )
        return StepGeneration(text="".join(pieces), tokens=tokens, finish_reason=finish)
