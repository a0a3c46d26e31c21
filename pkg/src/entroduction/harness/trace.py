"""Trace persistence: JSONL event streams and per-chain CSV summaries.

One JSON line per generated step, carrying the full metric bundle and the
decision around it. Floats are serialized at full double precision, so a
round-trip recovers the exact values.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import IO, Iterable

from ..engine import RunResult, TraceEvent

__all__ = [
    "trace_event_to_dict",
    "export_trace",
    "read_trace",
    "export_chain_summary",
    "summarize_trace",
]


def trace_event_to_dict(event: TraceEvent, task_id: str = "") -> dict:
    return {
        "task_id": task_id,
        "j": event.step_index,
        "chain_id": event.chain_id,
        "node_id": event.node_id,
        "n_tokens": event.metrics.n,
        "entropy": event.metrics.entropy_bits,
        "norm_entropy": event.metrics.normalized_entropy,
        "var_entropy": event.metrics.variance_entropy,
        "norm_var_entropy": event.metrics.normalized_variance_entropy,
        "dH": None if event.state is None else event.state.delta_entropy,
        "dVar": None if event.state is None else event.state.delta_variance,
        "best_action": None if event.best_action is None else event.best_action.value,
        "sampled_action": (
            None if event.sampled_action is None else event.sampled_action.value
        ),
        "executed": event.executed,
        "stop_pending_remaining": event.stop_pending_remaining,
        "finalize_reason": event.finalize_reason,
    }


def _open_sink(sink: str | Path | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(sink, (str, Path)):
        return open(sink, "w", encoding="utf-8"), True
    return sink, False


def export_trace(result: RunResult, sink: str | Path | IO[str], task_id: str = "") -> None:
    """Write one JSONL line per trace event to a path or open file."""
    handle, owned = _open_sink(sink)
    try:
        for event in result.trace:
            handle.write(json.dumps(trace_event_to_dict(event, task_id)) + "\n")
    finally:
        if owned:
            handle.close()


def read_trace(source: str | Path | IO[str]) -> list[dict]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            rows.append(json.loads(line))
    return rows


def export_chain_summary(result: RunResult, sink: str | Path | IO[str]) -> None:
    """Per-chain CSV: length, lifecycle outcome, lineage, answer, confidence."""
    handle, owned = _open_sink(sink)
    try:
        writer = csv.writer(handle)
        writer.writerow(
            ["chain_id", "length", "status", "parent_chain", "shared_prefix",
             "final_answer", "mean_norm_entropy"]
        )
        for chain in result.structure.chains:
            parent_chain, shared = ("", "") if chain.parent is None else chain.parent
            writer.writerow(
                [
                    chain.id,
                    len(chain.nodes),
                    chain.status.value,
                    parent_chain,
                    shared,
                    chain.final_answer or "",
                    f"{chain.mean_normalized_entropy():.12g}",
                ]
            )
    finally:
        if owned:
            handle.close()


def summarize_trace(rows: Iterable[dict]) -> dict:
    """Aggregate view of an exported trace (for CLI inspection)."""
    rows = list(rows)
    chains = sorted({row["chain_id"] for row in rows})
    executed_counts: dict[str, int] = {}
    for row in rows:
        executed_counts[row["executed"]] = executed_counts.get(row["executed"], 0) + 1
    entropies = [row["entropy"] for row in rows]
    return {
        "events": len(rows),
        "chains": len(chains),
        "max_step": max((row["j"] for row in rows), default=0),
        "executed_counts": dict(sorted(executed_counts.items())),
        "mean_entropy": (sum(entropies) / len(entropies)) if entropies else 0.0,
    }


def format_summary(summary: dict) -> str:
    buffer = io.StringIO()
    for key, value in summary.items():
        buffer.write(f"{key}: {value}\n")
    return buffer.getvalue()
