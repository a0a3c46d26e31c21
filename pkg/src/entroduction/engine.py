"""The control loop: generate, measure, decide, mutate, vote.

Each global iteration advances every unfinished chain by one generated step.
A chain's first two steps are taken unconditionally (no deltas exist yet);
from the third step on, the freshly measured step is compared with the
previous one and the delta pair is classified and sampled epsilon-greedily:

* Deepen keeps the chain growing,
* Expand immediately samples a sibling continuation, forming a new chain
  that shares the prefix by node identity (at the chain budget it degrades
  to a deepen),
* Stop finalizes the chain, either immediately (hard stop) or after a fixed
  grace of forced steps (soft stop).

A chain also finalizes as soon as a step states an answer ("the answer is
..."), and every surviving chain finalizes when the step budget runs out.
Chains without a detected answer are asked once more to state one so they
can join the vote. The run conclusion is the majority vote over chain
answers, ties broken by the most confident chain (lowest mean normalized
step entropy).
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backends.base import (
    Backend,
    BackendError,
    DEFAULT_ANSWER_MARKER,
    DEFAULT_SYSTEM_PROMPT,
    GenerationRequest,
    detect_answer_marker,
    render_conclusion_prompt,
)
from .metrics import (
    StepMetrics,
    TokenEntropyMode,
    compute_step_metrics,
)
from .policy import (
    Action,
    Decision,
    PolicyConfig,
    PolicyState,
    StopDirective,
    apply_stop,
    chain_rng,
    decide,
)
from .structure import Chain, ChainStatus, ReasoningNode, ReasoningStructure, create_structure

__all__ = [
    "ExecutedBehavior",
    "TraceEvent",
    "RunConfig",
    "RunResult",
    "run_task",
    "majority_vote",
    "chain_conclusions",
]


class ExecutedBehavior:
    """Executed-behavior labels for trace events (post remaps)."""

    DEEPEN = "deepen"
    EXPAND = "expand"
    STOP = "stop"
    FORCED_DEEPEN = "forced_deepen"

    ALL = (DEEPEN, EXPAND, STOP, FORCED_DEEPEN)


@dataclass(frozen=True)
class TraceEvent:
    """One generated step and the decision taken around it.

    Every event corresponds to exactly one generated node, including Stop
    events (the step that revealed the stop signal is kept; only future
    steps are cut off). ``state`` and the action fields are None for forced
    steps and for the sibling event of an expand.
    """

    step_index: int
    chain_id: int
    node_id: int
    metrics: StepMetrics
    state: PolicyState | None
    best_action: Action | None
    sampled_action: Action | None
    executed: str
    stop_pending_remaining: int | None = None
    finalize_reason: str | None = None


@dataclass(frozen=True)
class RunConfig:
    """Engine knobs for one run."""

    max_steps: int = 16
    max_chains: int = 16
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    token_entropy_mode: TokenEntropyMode = TokenEntropyMode.CONTRIBUTION
    answer_marker: str = DEFAULT_ANSWER_MARKER
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    temperature: float = 0.7
    max_tokens: int = 128
    top_logprobs: int = 5
    elicit_final_answer: bool = True
    backend_name: str = "synthetic"
    backend_options: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.max_chains < 1:
            raise ValueError("max_chains must be >= 1")


@dataclass
class RunResult:
    """Everything one run produced."""

    structure: ReasoningStructure
    conclusion: str
    trace: tuple[TraceEvent, ...]
    total_steps: int
    wall_time: float
    no_conclusion: bool = False
    aborted: bool = False
    error: str | None = None
    conclusion_calls: int = 0


def majority_vote(
    conclusions: Sequence[str], scores: Sequence[float] | None = None
) -> str:
    """Most frequent conclusion; ties go to the lowest accompanying score.

    ``scores`` aligns with ``conclusions`` (mean normalized step entropy of
    the producing chain: lower means more confident). Without scores, ties
    resolve to the value seen first. Empty input yields the empty string.
    """
    conclusions = list(conclusions)
    if not conclusions:
        return ""
    if scores is not None and len(scores) != len(conclusions):
        raise ValueError("scores must align with conclusions")
    counts = Counter(conclusions)
    top = max(counts.values())
    tied = [value for value, count in counts.items() if count == top]
    if len(tied) == 1:
        return tied[0]
    tied_set = set(tied)
    if scores is None:
        for value in conclusions:
            if value in tied_set:
                return value
        return tied[0]
    best_value = None
    best_key: tuple[float, int] | None = None
    for index, (value, score) in enumerate(zip(conclusions, scores)):
        if value not in tied_set:
            continue
        key = (float(score), index)
        if best_key is None or key < best_key:
            best_key = key
            best_value = value
    return best_value if best_value is not None else tied[0]


def chain_conclusions(result: RunResult) -> list[tuple[int, str, float]]:
    """(chain id, raw answer, mean normalized entropy) for answered chains."""
    out = []
    for chain in result.structure.chains:
        if chain.final_answer:
            out.append((chain.id, chain.final_answer, chain.mean_normalized_entropy()))
    return out


class _Runner:
    def __init__(self, task: str, config: RunConfig, backend: Backend):
        self.config = config
        self.backend = backend
        self.structure = create_structure(task, config.max_chains)
        self.trace: list[TraceEvent] = []
        self.rngs: dict[int, np.random.Generator] = {}
        self.total_steps = 0
        self.conclusion_calls = 0

    def rng_for(self, chain_id: int) -> np.random.Generator:
        if chain_id not in self.rngs:
            self.rngs[chain_id] = chain_rng(self.config.policy.seed, chain_id)
        return self.rngs[chain_id]

    def request_for(self, prior_texts: Sequence[str]) -> GenerationRequest:
        return GenerationRequest(
            system_prompt=self.config.system_prompt,
            task=self.structure.task,
            prior_steps=tuple(prior_texts),
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
            top_logprobs=self.config.top_logprobs,
        )

    def generate_node(self, chain: Chain, request: GenerationRequest) -> ReasoningNode:
        generation = self.backend.generate_step(request)
        if not generation.tokens:
            raise BackendError("empty step")
        metrics = compute_step_metrics(generation.tokens, self.config.token_entropy_mode)
        node = ReasoningNode(
            id=self.structure.allocate_node_id(),
            step_index=len(chain.nodes) + 1,
            text=generation.text,
            tokens=generation.tokens,
            metrics=metrics,
        )
        self.total_steps += 1
        return node

    def emit(self, event: TraceEvent) -> None:
        self.trace.append(event)

    def marker_in(self, text: str) -> str | None:
        return detect_answer_marker(text, self.config.answer_marker)

    def advance_chain(self, chain: Chain, step_index: int) -> None:
        """Advance one chain by one generated step within iteration ``step_index``."""
        prior_texts = chain.node_texts()
        request = self.request_for(prior_texts)
        node = self.generate_node(chain, request)
        answer = self.marker_in(node.text)

        if chain.status is ChainStatus.STOP_PENDING:
            chain.deepen(node)
            remaining = chain.tick_stop_grace()
            reason = None
            if answer:
                chain.final_answer = answer
                chain.finalize()
                reason = "answer_marker"
            elif remaining == 0:
                chain.finalize()
                reason = "stop_grace_exhausted"
            self.emit(
                TraceEvent(
                    step_index=step_index,
                    chain_id=chain.id,
                    node_id=node.id,
                    metrics=node.metrics,
                    state=None,
                    best_action=None,
                    sampled_action=None,
                    executed=ExecutedBehavior.FORCED_DEEPEN,
                    stop_pending_remaining=remaining,
                    finalize_reason=reason,
                )
            )
            return

        if len(chain.nodes) < 2:
            # No delta pair exists yet: the first two steps are unconditional.
            chain.deepen(node)
            reason = None
            if answer:
                chain.final_answer = answer
                chain.finalize()
                reason = "answer_marker"
            self.emit(
                TraceEvent(
                    step_index=step_index,
                    chain_id=chain.id,
                    node_id=node.id,
                    metrics=node.metrics,
                    state=None,
                    best_action=None,
                    sampled_action=None,
                    executed=ExecutedBehavior.FORCED_DEEPEN,
                    finalize_reason=reason,
                )
            )
            return

        previous = chain.nodes[-1].metrics
        state = PolicyState(
            delta_entropy=node.metrics.entropy_bits - previous.entropy_bits,
            delta_variance=node.metrics.variance_entropy - previous.variance_entropy,
        )
        decision = decide(state, self.config.policy, self.rng_for(chain.id))

        if answer:
            # An answer preempts whatever was sampled: keep the step, end the chain.
            chain.deepen(node)
            chain.final_answer = answer
            chain.finalize()
            self.emit(
                TraceEvent(
                    step_index=step_index,
                    chain_id=chain.id,
                    node_id=node.id,
                    metrics=node.metrics,
                    state=state,
                    best_action=decision.best,
                    sampled_action=decision.sampled,
                    executed=ExecutedBehavior.DEEPEN,
                    finalize_reason="answer_marker",
                )
            )
            return

        if decision.action is Action.EXPAND:
            self.execute_expand(chain, node, request, state, decision, step_index)
            return

        if decision.action is Action.STOP:
            chain.deepen(node)
            directive = apply_stop(chain, self.config.policy)
            reason = None
            remaining = None
            if directive is StopDirective.TERMINATE:
                chain.finalize()
                reason = "stop"
            else:
                remaining = chain.stop_remaining
            self.emit(
                TraceEvent(
                    step_index=step_index,
                    chain_id=chain.id,
                    node_id=node.id,
                    metrics=node.metrics,
                    state=state,
                    best_action=decision.best,
                    sampled_action=decision.sampled,
                    executed=ExecutedBehavior.STOP,
                    stop_pending_remaining=remaining,
                    finalize_reason=reason,
                )
            )
            return

        chain.deepen(node)
        self.emit(
            TraceEvent(
                step_index=step_index,
                chain_id=chain.id,
                node_id=node.id,
                metrics=node.metrics,
                state=state,
                best_action=decision.best,
                sampled_action=decision.sampled,
                executed=ExecutedBehavior.DEEPEN,
            )
        )

    def execute_expand(
        self,
        chain: Chain,
        node_a: ReasoningNode,
        request: GenerationRequest,
        state: PolicyState,
        decision: Decision,
        step_index: int,
    ) -> None:
        if len(self.structure.chains) >= self.structure.max_chains:
            # Chain budget exhausted: degrade to a deepen, skip the sibling call.
            chain.deepen(node_a)
            self.emit(
                TraceEvent(
                    step_index=step_index,
                    chain_id=chain.id,
                    node_id=node_a.id,
                    metrics=node_a.metrics,
                    state=state,
                    best_action=decision.best,
                    sampled_action=decision.sampled,
                    executed=ExecutedBehavior.DEEPEN,
                )
            )
            return

        node_b = self.generate_node(chain, request)
        new_id = self.structure.expand(chain, node_a, node_b)
        self.emit(
            TraceEvent(
                step_index=step_index,
                chain_id=chain.id,
                node_id=node_a.id,
                metrics=node_a.metrics,
                state=state,
                best_action=decision.best,
                sampled_action=decision.sampled,
                executed=ExecutedBehavior.EXPAND,
            )
        )
        assert new_id is not None  # budget was checked above
        sibling = self.structure.chains[-1]
        answer_b = self.marker_in(node_b.text)
        reason_b = None
        if answer_b:
            sibling.final_answer = answer_b
            sibling.finalize()
            reason_b = "answer_marker"
        self.emit(
            TraceEvent(
                step_index=step_index,
                chain_id=sibling.id,
                node_id=node_b.id,
                metrics=node_b.metrics,
                state=None,
                best_action=None,
                sampled_action=None,
                executed=ExecutedBehavior.EXPAND,
                finalize_reason=reason_b,
            )
        )

    def elicit_conclusions(self) -> None:
        for chain in self.structure.chains:
            if chain.final_answer or not chain.nodes:
                continue
            request = GenerationRequest(
                system_prompt=self.config.system_prompt,
                task=render_conclusion_prompt(
                    self.structure.task, tuple(chain.node_texts())
                ),
                prior_steps=tuple(chain.node_texts()),
                temperature=self.config.temperature,
                max_tokens=self.config.max_tokens,
                top_logprobs=self.config.top_logprobs,
            )
            generation = self.backend.generate_step(request)
            self.conclusion_calls += 1
            answer = self.marker_in(generation.text)
            if answer is None:
                answer = generation.text.strip()
            chain.final_answer = answer or None

    def run(self) -> RunResult:
        started = time.perf_counter()
        aborted = False
        error: str | None = None
        try:
            step_index = 0
            while step_index < self.config.max_steps and self.structure.unfinished_chains():
                step_index += 1
                for chain in self.structure.unfinished_chains():
                    self.advance_chain(chain, step_index)
            for chain in self.structure.unfinished_chains():
                chain.finalize()
            if self.config.elicit_final_answer:
                self.elicit_conclusions()
        except BackendError as exc:
            aborted = True
            error = str(exc)
            for chain in self.structure.unfinished_chains():
                chain.finalize()

        answered = [
            (chain.final_answer, chain.mean_normalized_entropy())
            for chain in self.structure.chains
            if chain.final_answer
        ]
        conclusion = majority_vote(
            [a for a, _ in answered], [s for _, s in answered]
        )
        return RunResult(
            structure=self.structure,
            conclusion=conclusion,
            trace=tuple(self.trace),
            total_steps=self.total_steps,
            wall_time=time.perf_counter() - started,
            no_conclusion=not answered,
            aborted=aborted,
            error=error,
            conclusion_calls=self.conclusion_calls,
        )


def run_task(task: str, config: RunConfig, backend: Backend) -> RunResult:
    """Run the full control loop for one task against ``backend``.

    Deterministic given (task, config, backend behavior): chain random
    streams are keyed by (seed, chain id) and chains are processed in
    ascending id order, with chains created mid-iteration first acting in
    the next iteration. A fatal backend error aborts the run and returns the
    partial trace with ``aborted`` set.
    """
    return _Runner(task, config, backend).run()
