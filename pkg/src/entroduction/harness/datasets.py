"""Benchmark dataset ingestion.

Datasets are JSONL with fields ``id``, ``question``, and ``answer``; choice
tasks may add an ``options`` list. Grade-school math files that embed the
gold answer after a ``####`` marker are unwrapped on load.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

__all__ = ["TaskKind", "TaskInstance", "DatasetError", "load_dataset", "extract_gold_answer"]

logger = logging.getLogger(__name__)

GOLD_MARKER_RE = re.compile(r"####\s*(.+)")


class TaskKind(enum.Enum):
    NUMERIC_MATH = "numeric"
    MULTIPLE_CHOICE = "choice"
    BOOLEAN = "boolean"


class DatasetError(Exception):
    """Unreadable dataset file or no usable rows."""


@dataclass(frozen=True)
class TaskInstance:
    id: str
    question: str
    gold_answer: str
    task_kind: TaskKind
    options: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        if not self.gold_answer:
            raise ValueError("gold_answer must be non-empty")


def extract_gold_answer(answer: str) -> str:
    """Unwrap a '#### <answer>' gold marker if present; strip commas from it."""
    match = GOLD_MARKER_RE.search(answer)
    if match:
        return match.group(1).strip().replace(",", "")
    return answer.strip()


def _parse_row(obj: dict, task_kind: TaskKind) -> TaskInstance:
    missing = [key for key in ("id", "question", "answer") if key not in obj]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    options = obj.get("options") or ()
    return TaskInstance(
        id=str(obj["id"]),
        question=str(obj["question"]),
        gold_answer=extract_gold_answer(str(obj["answer"])),
        task_kind=task_kind,
        options=tuple(str(o) for o in options),
    )


def load_dataset(
    path: str | Path, task_kind: TaskKind, strict: bool = False
) -> list[TaskInstance]:
    """Load a JSONL dataset; malformed lines are skipped with a warning, or
    rejected outright in strict mode. Zero valid rows is always an error."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc

    tasks: list[TaskInstance] = []
    for line_number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            tasks.append(_parse_row(json.loads(line), task_kind))
        except (ValueError, TypeError, KeyError) as exc:
            message = f"{path}:{line_number}: skipping malformed row: {exc}"
            if strict:
                raise DatasetError(message) from exc
            logger.warning(message)
    if not tasks:
        raise DatasetError(f"no valid rows in {path}")
    return tasks
