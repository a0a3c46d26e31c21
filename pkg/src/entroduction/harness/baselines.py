"""Fixed-shape baseline runners: plain chains, self-consistency, and trees.

Step accounting is exact and computed from the parameters, never hard-coded:
a plain chain costs ``steps`` nodes, self-consistency costs ``chains *
steps``, and a tree with ``branching`` children per node over ``layers``
levels (root level included) costs sum(branching**k for k in range(layers))
nodes. Final-answer elicitation calls are tracked separately from reasoning
steps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..backends.base import (
    Backend,
    DEFAULT_ANSWER_MARKER,
    DEFAULT_SYSTEM_PROMPT,
    GenerationRequest,
    detect_answer_marker,
    render_conclusion_prompt,
)

__all__ = [
    "BaselineMethod",
    "BaselineParams",
    "baseline_step_count",
    "math_params",
    "commonsense_params",
    "run_chain_baseline",
    "run_tree_baseline",
    "BaselineOutcome",
]


class BaselineMethod(enum.Enum):
    COT = "cot"
    COT_SC = "cotsc"
    TOT = "tot"


@dataclass(frozen=True)
class BaselineParams:
    """Shape parameters for the fixed baselines."""

    steps: int = 8
    chains: int = 1
    vote_width: int | None = None
    branching: int = 3
    layers: int = 5

    def __post_init__(self) -> None:
        if self.steps < 1 or self.chains < 1 or self.branching < 1 or self.layers < 1:
            raise ValueError("baseline parameters must be >= 1")


def baseline_step_count(method: BaselineMethod, params: BaselineParams) -> int:
    """Exact per-task reasoning-step cost of a baseline configuration."""
    if method is BaselineMethod.COT:
        return params.steps
    if method is BaselineMethod.COT_SC:
        return params.chains * params.steps
    return sum(params.branching**k for k in range(params.layers))


def math_params(method: BaselineMethod) -> BaselineParams:
    """Standard math-task configuration: 8-step chains, 3-chain consistency,
    ternary tree of 5 levels."""
    if method is BaselineMethod.COT:
        return BaselineParams(steps=8, chains=1)
    if method is BaselineMethod.COT_SC:
        return BaselineParams(steps=8, chains=3)
    return BaselineParams(branching=3, layers=5)


def commonsense_params(method: BaselineMethod) -> BaselineParams:
    """Standard commonsense configuration: 5-step chains, otherwise as math."""
    if method is BaselineMethod.COT:
        return BaselineParams(steps=5, chains=1)
    if method is BaselineMethod.COT_SC:
        return BaselineParams(steps=5, chains=3)
    return BaselineParams(branching=3, layers=5)


@dataclass
class BaselineOutcome:
    """Raw per-chain answers plus exact call accounting for one task."""

    answers: list[str]
    steps_generated: int
    conclusion_calls: int


def _request(
    task: str,
    prior: tuple[str, ...],
    temperature: float,
    max_tokens: int,
    top_logprobs: int,
    system_prompt: str,
) -> GenerationRequest:
    return GenerationRequest(
        system_prompt=system_prompt,
        task=task,
        prior_steps=prior,
        temperature=temperature,
        max_tokens=max_tokens,
        top_logprobs=top_logprobs,
    )


def _elicit_answer(
    task: str,
    prior: tuple[str, ...],
    backend: Backend,
    temperature: float,
    max_tokens: int,
    top_logprobs: int,
    system_prompt: str,
    marker: str,
) -> str:
    request = GenerationRequest(
        system_prompt=system_prompt,
        task=render_conclusion_prompt(task, prior),
        prior_steps=prior,
        temperature=temperature,
        max_tokens=max_tokens,
        top_logprobs=top_logprobs,
    )
    generation = backend.generate_step(request)
    answer = detect_answer_marker(generation.text, marker)
    return answer if answer is not None else generation.text.strip()


def run_chain_baseline(
    task: str,
    params: BaselineParams,
    backend: Backend,
    *,
    n_chains: int | None = None,
    temperature: float = 0.7,
    max_tokens: int = 128,
    top_logprobs: int = 5,
    system_prompt: str = DEFAULT_SYSTEM_PROMPT,
    marker: str = DEFAULT_ANSWER_MARKER,
) -> BaselineOutcome:
    """Fixed-length chains: every chain generates exactly ``params.steps``
    nodes (no early stopping, so accounting stays exact), then answers are
    sampled ``vote_width`` times round-robin across chains."""
    chains = n_chains if n_chains is not None else params.chains
    transcripts: list[tuple[str, ...]] = []
    steps_generated = 0
    for _ in range(chains):
        prior: tuple[str, ...] = ()
        for _ in range(params.steps):
            generation = backend.generate_step(
                _request(task, prior, temperature, max_tokens, top_logprobs, system_prompt)
            )
            steps_generated += 1
            prior = prior + (generation.text,)
        transcripts.append(prior)

    vote_width = params.vote_width if params.vote_width is not None else chains
    answers: list[str] = []
    conclusion_calls = 0
    for i in range(vote_width):
        prior = transcripts[i % len(transcripts)]
        marker_hits = [
            m for m in (detect_answer_marker(t, marker) for t in prior) if m is not None
        ]
        if marker_hits:
            # A stated answer inside the transcript stands in for elicitation.
            answers.append(marker_hits[-1])
            continue
        answers.append(
            _elicit_answer(
                task, prior, backend, temperature, max_tokens, top_logprobs,
                system_prompt, marker,
            )
        )
        conclusion_calls += 1
    return BaselineOutcome(answers, steps_generated, conclusion_calls)


def run_tree_baseline(
    task: str,
    params: BaselineParams,
    backend: Backend,
    *,
    temperature: float = 0.7,
    max_tokens: int = 128,
    top_logprobs: int = 5,
    system_prompt: str = DEFAULT_SYSTEM_PROMPT,
    marker: str = DEFAULT_ANSWER_MARKER,
) -> BaselineOutcome:
    """Full tree expansion: one root step, then ``branching`` children per
    node for ``layers - 1`` further levels; answers come from the leaves."""
    steps_generated = 0
    frontier: list[tuple[str, ...]] = []

    root = backend.generate_step(
        _request(task, (), temperature, max_tokens, top_logprobs, system_prompt)
    )
    steps_generated += 1
    frontier.append((root.text,))

    for _ in range(params.layers - 1):
        next_frontier: list[tuple[str, ...]] = []
        for path in frontier:
            for _ in range(params.branching):
                generation = backend.generate_step(
                    _request(task, path, temperature, max_tokens, top_logprobs, system_prompt)
                )
                steps_generated += 1
                next_frontier.append(path + (generation.text,))
        frontier = next_frontier

    answers: list[str] = []
    conclusion_calls = 0
    for path in frontier:
        found = detect_answer_marker(path[-1], marker)
        if found is not None:
            answers.append(found)
            continue
        answers.append(
            _elicit_answer(
                task, path, backend, temperature, max_tokens, top_logprobs,
                system_prompt, marker,
            )
        )
        conclusion_calls += 1
    return BaselineOutcome(answers, steps_generated, conclusion_calls)
