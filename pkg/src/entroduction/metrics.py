"""Entropy kernels for a single reasoning step.

A reasoning step is a sentence made of sampled tokens. Each token carries the
log-probability the model assigned to it at its position. Treating those
log-probabilities as the step's logit vector, a softmax turns them into a
distribution over the step's positions, from which we compute:

* step entropy (bits): Shannon entropy of that distribution,
* normalized entropy: step entropy divided by its maximum log2(n),
* a per-token entropy series (three selectable definitions),
* variance entropy: the population variance of that series,
* normalized variance entropy: variance entropy divided by log2(n).

All logarithms are base 2. All functions here are pure and thread-safe.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TokenEntropyMode",
    "TokenRecord",
    "StepMetrics",
    "step_softmax",
    "step_entropy",
    "normalized_step_entropy",
    "token_entropies",
    "variance_entropy",
    "normalized_variance_entropy",
    "compute_step_metrics",
]


class TokenEntropyMode(enum.Enum):
    """Definition used for the per-token entropy series.

    CONTRIBUTION: each token contributes -p*log2(p) of the step distribution,
        so the series sums to the step entropy and its mean is entropy/n.
    SURPRISAL: each token's information content -log2(p).
    VOCAB_TOP_K: Shannon entropy of the renormalized top-K alternative
        distribution reported for that position; requires alternatives.
    """

    CONTRIBUTION = "contribution"
    SURPRISAL = "surprisal"
    VOCAB_TOP_K = "vocab_top_k"


DEFAULT_TOKEN_ENTROPY_MODE = TokenEntropyMode.CONTRIBUTION


@dataclass(frozen=True)
class TokenRecord:
    """One generated token with its log-probability evidence.

    ``chosen_logprob`` is the natural-log probability of the sampled token.
    ``top_alternatives`` optionally holds the top-K per-position alternatives
    as (token, logprob) pairs, sorted by descending logprob.
    """

    text: str
    chosen_logprob: float
    top_alternatives: tuple[tuple[str, float], ...] | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.chosen_logprob):
            raise ValueError("non-finite logit")
        if self.chosen_logprob > 0.0:
            raise ValueError(f"chosen_logprob must be <= 0, got {self.chosen_logprob}")
        if self.top_alternatives is not None:
            alts = tuple((str(t), float(lp)) for t, lp in self.top_alternatives)
            for _, lp in alts:
                if lp > 0.0:
                    raise ValueError(f"alternative logprob must be <= 0, got {lp}")
            if any(alts[i][1] < alts[i + 1][1] for i in range(len(alts) - 1)):
                raise ValueError("alternatives must be sorted by descending logprob")
            object.__setattr__(self, "top_alternatives", alts)


@dataclass(frozen=True)
class StepMetrics:
    """Entropy bundle for one reasoning step of ``n`` tokens."""

    n: int
    entropy_bits: float
    normalized_entropy: float
    mean_token_entropy: float
    variance_entropy: float
    normalized_variance_entropy: float


def step_softmax(logits: Sequence[float] | np.ndarray) -> np.ndarray:
    """Softmax over a step's logit vector, computed with max-subtraction.

    Invariant under adding a constant to every logit; entries are positive
    and sum to 1 within 1e-12.
    """
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("empty step")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite logit")
    shifted = arr - arr.max()
    weights = np.exp(shifted)
    return weights / weights.sum()


def step_entropy(p: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy, in bits, of a probability vector.

    Uses the convention 0*log2(0) = 0. The input must sum to 1 within 1e-9.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("empty step")
    if np.any(arr < 0.0) or abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError("not a distribution")
    nonzero = arr[arr > 0.0]
    return float(-(nonzero * np.log2(nonzero)).sum())


def normalized_step_entropy(entropy_bits: float, n: int) -> float:
    """Entropy divided by its maximum log2(n).

    A one-token step has no within-step dispersion, so n=1 maps to 0 rather
    than dividing by log2(1) = 0.
    """
    if n <= 0:
        raise ValueError("invalid length")
    if n == 1:
        return 0.0
    return entropy_bits / math.log2(n)


def token_entropies(
    p: Sequence[float] | np.ndarray,
    records: Sequence[TokenRecord],
    mode: TokenEntropyMode = DEFAULT_TOKEN_ENTROPY_MODE,
) -> np.ndarray:
    """Per-token entropy series under the selected definition.

    In CONTRIBUTION mode the series sums to the step entropy, tying the
    mean token entropy to entropy/n. VOCAB_TOP_K requires every record to
    carry top alternatives.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.size != len(records):
        raise ValueError(
            f"probability vector length {arr.size} does not match {len(records)} records"
        )
    if mode is TokenEntropyMode.CONTRIBUTION:
        out = np.zeros_like(arr)
        mask = arr > 0.0
        out[mask] = -arr[mask] * np.log2(arr[mask])
        return out
    if mode is TokenEntropyMode.SURPRISAL:
        return -np.log2(arr)
    if mode is TokenEntropyMode.VOCAB_TOP_K:
        values = []
        for record in records:
            if not record.top_alternatives:
                raise ValueError("alternatives unavailable")
            alt_logprobs = [lp for _, lp in record.top_alternatives]
            values.append(step_entropy(step_softmax(alt_logprobs)))
        return np.asarray(values, dtype=np.float64)
    raise ValueError(f"unknown token entropy mode: {mode}")


def variance_entropy(token_entropy_values: Sequence[float] | np.ndarray) -> float:
    """Population variance (divide by n) of a per-token entropy series."""
    arr = np.asarray(token_entropy_values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("empty step")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite token entropy")
    return float(np.var(arr))


def normalized_variance_entropy(var: float, n: int) -> float:
    """Variance entropy divided by log2(n); 0 for one-token steps."""
    if n <= 0:
        raise ValueError("invalid length")
    if var < 0.0:
        raise ValueError("negative variance")
    if n == 1:
        return 0.0
    return var / math.log2(n)


def compute_step_metrics(
    records: Sequence[TokenRecord] | Iterable[TokenRecord],
    mode: TokenEntropyMode = DEFAULT_TOKEN_ENTROPY_MODE,
) -> StepMetrics:
    """All entropy quantities for one step, from its token records.

    The sampled tokens' log-probabilities serve as the step's logit vector;
    raw logits are not observable through inference APIs, and the softmax
    absorbs any per-step constant shift.
    """
    records = list(records)
    if not records:
        raise ValueError("empty step")
    logits = np.asarray([r.chosen_logprob for r in records], dtype=np.float64)
    probabilities = step_softmax(logits)
    n = len(records)
    entropy = step_entropy(probabilities)
    series = token_entropies(probabilities, records, mode)
    var = variance_entropy(series)
    return StepMetrics(
        n=n,
        entropy_bits=entropy,
        normalized_entropy=normalized_step_entropy(entropy, n),
        mean_token_entropy=float(series.mean()),
        variance_entropy=var,
        normalized_variance_entropy=normalized_variance_entropy(var, n),
    )
