"""The reasoning structure: chains of sentence-level nodes.

A structure starts as a single empty chain and grows by three mutations:
deepen (append a node to a chain), expand (fork a chain into two chains that
share their prefix by node identity), and finalize (permanently stop a
chain). Chain count is capped by ``max_chains``; an expand at the cap
degrades to a deepen so progress is never lost.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .metrics import StepMetrics, TokenRecord

__all__ = [
    "ChainStatus",
    "ReasoningNode",
    "Chain",
    "ReasoningStructure",
    "create_structure",
]


class ChainStatus(enum.Enum):
    ACTIVE = "active"
    STOP_PENDING = "stop_pending"
    FINALIZED = "finalized"


@dataclass(frozen=True)
class ReasoningNode:
    """One sentence-level reasoning step inside a chain."""

    id: int
    step_index: int
    text: str
    tokens: tuple[TokenRecord, ...]
    metrics: StepMetrics

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.step_index < 1:
            raise ValueError("step_index must be >= 1")
        if not self.text:
            raise ValueError("node text must be non-empty")
        if not self.tokens:
            raise ValueError("node tokens must be non-empty")
        if self.metrics.n != len(self.tokens):
            raise ValueError(
                f"metrics.n={self.metrics.n} does not match {len(self.tokens)} tokens"
            )


@dataclass
class Chain:
    """An ordered sequence of reasoning nodes with a lifecycle status.

    ``parent`` records an expand origin as (parent chain id, shared prefix
    length). ``stop_remaining`` counts the grace steps left once a soft stop
    is pending.
    """

    id: int
    nodes: list[ReasoningNode] = field(default_factory=list)
    status: ChainStatus = ChainStatus.ACTIVE
    stop_remaining: int | None = None
    parent: tuple[int, int] | None = None
    final_answer: str | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def finalized(self) -> bool:
        return self.status is ChainStatus.FINALIZED

    def node_texts(self) -> list[str]:
        return [node.text for node in self.nodes]

    def deepen(self, node: ReasoningNode) -> None:
        """Append the next node; allowed while active or stop-pending."""
        if self.finalized:
            raise ValueError("chain finalized")
        if node.step_index != len(self.nodes) + 1:
            raise ValueError(
                f"expected step_index {len(self.nodes) + 1}, got {node.step_index}"
            )
        self.nodes.append(node)

    def finalize(self) -> None:
        """Permanently stop this chain; idempotent."""
        self.status = ChainStatus.FINALIZED
        self.stop_remaining = None

    def begin_stop_grace(self, remaining: int) -> None:
        """Enter the soft-stop grace period with ``remaining`` forced steps."""
        if self.finalized:
            raise ValueError("chain finalized")
        if remaining < 1:
            raise ValueError("grace must be >= 1 step")
        self.status = ChainStatus.STOP_PENDING
        self.stop_remaining = remaining

    def tick_stop_grace(self) -> int:
        """Consume one grace step; returns the remaining count."""
        if self.status is not ChainStatus.STOP_PENDING or self.stop_remaining is None:
            raise ValueError("chain is not stop-pending")
        self.stop_remaining -= 1
        return self.stop_remaining

    def mean_normalized_entropy(self) -> float:
        """Mean normalized step entropy over this chain's nodes; 0 if empty."""
        if not self.nodes:
            return 0.0
        return sum(n.metrics.normalized_entropy for n in self.nodes) / len(self.nodes)


@dataclass
class ReasoningStructure:
    """All chains built for one task, capped at ``max_chains``."""

    task: str
    max_chains: int
    chains: list[Chain] = field(default_factory=list)
    _next_chain_id: int = 0
    _next_node_id: int = 0

    def allocate_node_id(self) -> int:
        node_id = self._next_node_id
        self._next_node_id += 1
        return node_id

    def _allocate_chain(self, parent: tuple[int, int] | None = None) -> Chain:
        chain = Chain(id=self._next_chain_id, parent=parent)
        self._next_chain_id += 1
        self.chains.append(chain)
        return chain

    def unfinished_chains(self) -> list[Chain]:
        """Active and stop-pending chains, in ascending id order."""
        return [c for c in self.chains if not c.finalized]

    def depth(self) -> int:
        """Length of the longest chain; 0 for a fresh structure."""
        if not self.chains:
            return 0
        return max(len(chain) for chain in self.chains)

    def total_nodes(self) -> int:
        """Count of distinct nodes across all chains (shared prefixes once)."""
        seen: set[int] = set()
        for chain in self.chains:
            seen.update(node.id for node in chain.nodes)
        return len(seen)

    def expand(
        self, chain: Chain, node_a: ReasoningNode, node_b: ReasoningNode
    ) -> int | None:
        """Fork ``chain``: it receives ``node_a``; a new chain gets the shared
        prefix plus ``node_b``.

        At the chain budget this degrades to a plain deepen of ``node_a`` and
        returns None instead of the new chain id.
        """
        if chain.status is not ChainStatus.ACTIVE:
            raise ValueError("can only expand an active chain")
        expected = len(chain.nodes) + 1
        if node_a.step_index != expected or node_b.step_index != expected:
            raise ValueError(f"both fork nodes must have step_index {expected}")
        prefix = list(chain.nodes)
        chain.deepen(node_a)
        if len(self.chains) >= self.max_chains:
            return None
        sibling = self._allocate_chain(parent=(chain.id, len(prefix)))
        sibling.nodes = prefix + [node_b]
        return sibling.id


def create_structure(task: str, max_chains: int) -> ReasoningStructure:
    """A fresh structure with one active, empty chain."""
    if not task:
        raise ValueError("empty task")
    if max_chains < 1:
        raise ValueError("max_chains must be >= 1")
    structure = ReasoningStructure(task=task, max_chains=max_chains)
    structure._allocate_chain()
    return structure
