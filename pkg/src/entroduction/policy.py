"""Behavior selection from entropy deltas.

The controller observes how step entropy and variance entropy moved between
the two most recent steps of a chain and maps the sign pair to a best action:

* entropy down, variance down: the chain is settling, keep deepening;
* entropy up, variance down: broader but not dispersed, keep deepening;
* entropy down, variance up: locally divergent, expand into a second branch;
* entropy up, variance up: unstable, stop this chain.

Zero deltas count as decreases, favoring continuation. The actual action is
then drawn epsilon-greedily: the best action with probability 1 - epsilon,
each alternative with epsilon / 2. A sampled Stop is applied either hard
(stop_k = 1, finalize now) or soft (stop_k >= 2, a grace of stop_k - 1 forced
steps before finalizing, not cancellable).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .structure import Chain, ChainStatus

__all__ = [
    "Action",
    "MetricMode",
    "StopDirective",
    "PolicyState",
    "PolicyConfig",
    "Decision",
    "classify",
    "action_distribution",
    "apply_metric_mode",
    "decide",
    "sample_action",
    "apply_stop",
    "chain_rng",
]


class Action(enum.Enum):
    DEEPEN = "deepen"
    EXPAND = "expand"
    STOP = "stop"


ACTION_ORDER: tuple[Action, ...] = (Action.DEEPEN, Action.EXPAND, Action.STOP)


class MetricMode(enum.Enum):
    """Which delta components drive classification (ablation switches)."""

    BOTH = "both"
    ENTROPY_ONLY = "entropy"
    VARIANCE_ONLY = "variance"
    NONE = "none"


class StopDirective(enum.Enum):
    CONTINUE = "continue"
    TERMINATE = "terminate"


@dataclass(frozen=True)
class PolicyState:
    """Deltas between consecutive steps: (entropy change, variance change)."""

    delta_entropy: float
    delta_variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta_entropy) and math.isfinite(self.delta_variance)):
            raise ValueError("policy state must be finite")


@dataclass(frozen=True)
class PolicyConfig:
    epsilon: float = 0.25
    stop_k: int = 2
    metric_mode: MetricMode = MetricMode.BOTH
    expand_enabled: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.stop_k < 1:
            raise ValueError(f"stop_k must be >= 1, got {self.stop_k}")


@dataclass(frozen=True)
class Decision:
    """Outcome of one sampling round.

    ``sampled`` is the raw epsilon-greedy draw; ``action`` is the draw after
    the expand-disabled remap and is what the engine executes.
    """

    best: Action
    sampled: Action
    action: Action


def classify(state: PolicyState) -> Action:
    """Best action for a delta pair; zero components count as decreases."""
    if state.delta_variance <= 0.0:
        return Action.DEEPEN
    if state.delta_entropy <= 0.0:
        return Action.EXPAND
    return Action.STOP


def action_distribution(best: Action, epsilon: float) -> dict[Action, float]:
    """Epsilon-greedy probabilities: 1 - epsilon on best, epsilon/2 elsewhere."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    alternative = epsilon / (len(ACTION_ORDER) - 1)
    return {a: (1.0 - epsilon if a is best else alternative) for a in ACTION_ORDER}


def apply_metric_mode(state: PolicyState, mode: MetricMode) -> PolicyState:
    """Zero out the delta components the ablation mode ignores."""
    if mode is MetricMode.BOTH:
        return state
    if mode is MetricMode.ENTROPY_ONLY:
        return PolicyState(state.delta_entropy, 0.0)
    if mode is MetricMode.VARIANCE_ONLY:
        return PolicyState(0.0, state.delta_variance)
    return PolicyState(0.0, 0.0)


def _draw(distribution: dict[Action, float], rng: np.random.Generator) -> Action:
    u = float(rng.random())
    cumulative = 0.0
    for action in ACTION_ORDER:
        cumulative += distribution[action]
        if u < cumulative:
            return action
    return ACTION_ORDER[-1]


def decide(state: PolicyState, config: PolicyConfig, rng: np.random.Generator) -> Decision:
    """Classify, sample, and remap in one round.

    MetricMode.NONE bypasses sampling entirely (always deepen, no rng draw).
    With expand disabled, a sampled Expand executes as Deepen; the raw draw
    is preserved for the trace.
    """
    if config.metric_mode is MetricMode.NONE:
        return Decision(Action.DEEPEN, Action.DEEPEN, Action.DEEPEN)
    best = classify(apply_metric_mode(state, config.metric_mode))
    sampled = _draw(action_distribution(best, config.epsilon), rng)
    action = sampled
    if sampled is Action.EXPAND and not config.expand_enabled:
        action = Action.DEEPEN
    return Decision(best=best, sampled=sampled, action=action)


def sample_action(
    state: PolicyState, config: PolicyConfig, rng: np.random.Generator
) -> Action:
    """The action to execute for ``state`` (post ablation remaps)."""
    return decide(state, config, rng).action


def apply_stop(chain: Chain, config: PolicyConfig) -> StopDirective:
    """Apply a sampled Stop to ``chain``.

    Hard stop (stop_k = 1) terminates immediately. Soft stop puts the chain
    into a stop-pending grace of stop_k - 1 steps; the engine force-deepens
    and ticks the grace down each iteration, finalizing at zero. The grace is
    not cancellable by later deltas.
    """
    if config.stop_k <= 1:
        return StopDirective.TERMINATE
    if chain.status is ChainStatus.STOP_PENDING:
        return StopDirective.CONTINUE
    chain.begin_stop_grace(config.stop_k - 1)
    return StopDirective.CONTINUE


def chain_rng(seed: int, chain_id: int) -> np.random.Generator:
    """Independent random stream for one chain of one run.

    Streams are keyed by (run seed, chain id), so per-chain draw sequences do
    not depend on scheduling order.
    """
    material = [seed & 0xFFFFFFFFFFFFFFFF, chain_id & 0xFFFFFFFFFFFFFFFF]
    return np.random.default_rng(np.random.SeedSequence(material))
