"""Command-line interface.

Subcommands: ``run`` plays one task, ``bench`` scores a dataset, ``trace``
re-exports or inspects a saved trace. Settings resolve in order: built-in
defaults, then a key=value config file, then explicit flags. Exit codes:
0 success, 1 configuration error, 2 backend failure, 3 dataset error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import (
    BackendError,
    ConfigurationError,
    OpenAIChatBackend,
    ScriptedBackend,
    SyntheticBackend,
    SyntheticStep,
)
from .engine import RunConfig, run_task
from .harness import (
    BaselineParams,
    DatasetError,
    Method,
    TaskKind,
    export_chain_summary,
    export_trace,
    format_summary,
    load_dataset,
    read_trace,
    run_benchmark,
    summarize_trace,
)
from .policy import MetricMode, PolicyConfig

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BACKEND = 2
EXIT_DATASET = 3

DEFAULT_SCHEDULE = "0.95,0.9,0.85,0.5,0.3"

METRIC_MODES = {
    "both": MetricMode.BOTH,
    "entropy": MetricMode.ENTROPY_ONLY,
    "variance": MetricMode.VARIANCE_ONLY,
    "none": MetricMode.NONE,
}
TASK_KINDS = {
    "numeric": TaskKind.NUMERIC_MATH,
    "choice": TaskKind.MULTIPLE_CHOICE,
    "boolean": TaskKind.BOOLEAN,
}
METHODS = {
    "entroduction": Method.ENTRODUCTION,
    "cot": Method.COT,
    "cotsc": Method.COT_SC,
    "tot": Method.TOT,
}


def read_config_file(path: str | None) -> dict[str, str]:
    """Parse a plain key=value config file; '#' starts a comment line."""
    if path is None:
        return {}
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{line_number}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


class Settings:
    """Flag/config merge with the documented defaults."""

    def __init__(self, flags: dict, file_values: dict[str, str]):
        self._flags = flags
        self._file = file_values

    def get(self, key: str, default, cast=str):
        flag = self._flags.get(key)
        if flag is not None:
            return flag
        if key in self._file:
            raw = self._file[key]
            try:
                if cast is bool:
                    return raw.strip().lower() in ("1", "true", "yes", "on")
                return cast(raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad config value for {key}: {raw}") from exc
        return default


def build_backend(settings: Settings):
    name = settings.get("backend", "synthetic")
    if name == "synthetic":
        schedule_text = settings.get("schedule", DEFAULT_SCHEDULE)
        try:
            targets = [float(v) for v in str(schedule_text).split(",") if v.strip()]
            schedule = [
                SyntheticStep(target_normalized_entropy=t, n_tokens=8) for t in targets
            ]
        except ValueError as exc:
            raise ConfigurationError(f"bad schedule: {schedule_text}") from exc
        return SyntheticBackend(schedule)
    if name == "scripted":
        fixture = settings.get("fixture", None)
        if not fixture:
            raise ConfigurationError("scripted backend requires --fixture")
        return ScriptedBackend.from_jsonl(fixture)
    if name == "openai":
        model = settings.get("model", None)
        if not model:
            raise ConfigurationError("openai backend requires --model")
        endpoint = settings.get("endpoint", None)
        api_key = settings.get("api_key", None)
        if endpoint:
            return OpenAIChatBackend(endpoint=endpoint, model=model, api_key=api_key)
        return OpenAIChatBackend.from_env(model=model)
    raise ConfigurationError(f"unknown backend: {name}")


def build_run_config(settings: Settings) -> RunConfig:
    metric_mode_name = str(settings.get("metric_mode", "both")).lower()
    if metric_mode_name not in METRIC_MODES:
        raise ConfigurationError(f"unknown metric mode: {metric_mode_name}")
    try:
        policy = PolicyConfig(
            epsilon=float(settings.get("epsilon", 0.25, cast=float)),
            stop_k=int(settings.get("stop_k", 2, cast=int)),
            metric_mode=METRIC_MODES[metric_mode_name],
            expand_enabled=settings.get("expand", True, cast=bool),
            seed=int(settings.get("seed", 0, cast=int)),
        )
        return RunConfig(
            max_steps=int(settings.get("max_steps", 16, cast=int)),
            max_chains=int(settings.get("max_chains", 16, cast=int)),
            policy=policy,
            temperature=float(settings.get("temperature", 0.7, cast=float)),
            max_tokens=int(settings.get("max_tokens", 128, cast=int)),
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def common_options(command):
    options = [
        click.option("--config", "config_path", default=None, help="Key=value config file."),
        click.option("--backend", default=None, help="synthetic | scripted | openai."),
        click.option("--endpoint", default=None, help="OpenAI-compatible API base URL."),
        click.option("--model", default=None, help="Model name for the HTTP backend."),
        click.option("--api-key", default=None, help="API key (or use environment)."),
        click.option("--fixture", default=None, help="Fixture JSONL for the scripted backend."),
        click.option("--schedule", default=None, help="Entropy targets for the synthetic backend."),
        click.option("--epsilon", type=float, default=None, help="Exploration rate (default 0.25)."),
        click.option("--max-steps", type=int, default=None, help="Step budget (default 16)."),
        click.option("--max-chains", type=int, default=None, help="Chain budget (default 16)."),
        click.option("--stop-k", type=int, default=None, help="Soft-stop grace (default 2)."),
        click.option("--metric-mode", default=None, help="both | entropy | variance | none."),
        click.option("--expand/--no-expand", "expand", default=None, help="Toggle the expand behavior."),
        click.option("--seed", type=int, default=None, help="Run seed (default 0)."),
        click.option("--temperature", type=float, default=None, help="Sampling temperature (default 0.7)."),
        click.option("--max-tokens", type=int, default=None, help="Per-step token cap (default 128)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _settings(config_path: str | None, **flags) -> Settings:
    return Settings(flags, read_config_file(config_path))


@click.group()
def main() -> None:
    """Entropy-guided multi-step reasoning."""


@main.command("run")
@click.argument("task")
@common_options
@click.option("--out", default=None, help="Write the trace JSONL here.")
@click.option("--summary-out", default=None, help="Write the per-chain CSV here.")
def run_command(task, config_path, out, summary_out, **flags) -> None:
    """Run one task and print its conclusion and run statistics."""
    try:
        settings = _settings(config_path, **flags)
        backend = build_backend(settings)
        config = build_run_config(settings)
        result = run_task(task, config, backend)
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except BackendError as exc:
        click.echo(f"backend failure: {exc}", err=True)
        sys.exit(EXIT_BACKEND)

    if out:
        export_trace(result, out)
    if summary_out:
        export_chain_summary(result, summary_out)
    if result.aborted:
        click.echo(f"backend failure: {result.error}", err=True)
        sys.exit(EXIT_BACKEND)
    click.echo(f"conclusion: {result.conclusion!r}")
    click.echo(
        f"chains: {len(result.structure.chains)}  depth: {result.structure.depth()}  "
        f"steps: {result.total_steps}  wall: {result.wall_time:.3f}s"
    )
    sys.exit(EXIT_OK)


@main.command("bench")
@common_options
@click.option("--dataset", required=False, default=None, help="Dataset JSONL path.")
@click.option("--task-kind", default=None, help="numeric | choice | boolean.")
@click.option("--method", "method_name", default=None, help="entroduction | cot | cotsc | tot.")
@click.option("--steps", type=int, default=None, help="Baseline chain length.")
@click.option("--chains", type=int, default=None, help="Baseline chain count.")
@click.option("--branching", type=int, default=None, help="Tree branching factor.")
@click.option("--layers", type=int, default=None, help="Tree layer count.")
@click.option("--strict", is_flag=True, default=False, help="Reject malformed dataset rows.")
@click.option("--out", default=None, help="Write the report JSON here.")
@click.option("--trace-out", default=None, help="Write all run traces (JSONL) here.")
def bench_command(
    config_path, dataset, task_kind, method_name, steps, chains, branching,
    layers, strict, out, trace_out, **flags,
) -> None:
    """Score a method over a JSONL dataset."""
    try:
        settings = _settings(config_path, **flags)
        dataset_path = dataset or settings.get("dataset", None)
        if not dataset_path:
            raise ConfigurationError("--dataset is required")
        kind_name = str(task_kind or settings.get("task_kind", "numeric")).lower()
        if kind_name not in TASK_KINDS:
            raise ConfigurationError(f"unknown task kind: {kind_name}")
        method_key = str(method_name or settings.get("method", "entroduction")).lower()
        if method_key not in METHODS:
            raise ConfigurationError(f"unknown method: {method_key}")
        backend = build_backend(settings)
        run_config = build_run_config(settings)
        params = BaselineParams(
            steps=steps if steps is not None else int(settings.get("steps", 8, cast=int)),
            chains=chains if chains is not None else int(settings.get("chains", 3, cast=int)),
            branching=branching if branching is not None else int(settings.get("branching", 3, cast=int)),
            layers=layers if layers is not None else int(settings.get("layers", 5, cast=int)),
        )
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    try:
        tasks = load_dataset(dataset_path, TASK_KINDS[kind_name], strict=strict)
    except DatasetError as exc:
        click.echo(f"dataset error: {exc}", err=True)
        sys.exit(EXIT_DATASET)

    trace_handle = open(trace_out, "w", encoding="utf-8") if trace_out else None
    on_result = None
    if trace_handle is not None:
        def on_result(task, result):  # noqa: E306
            export_trace(result, trace_handle, task_id=task.id)

    try:
        report = run_benchmark(
            METHODS[method_key], tasks, backend,
            run_config=run_config, params=params, on_result=on_result,
        )
    except BackendError as exc:
        click.echo(f"backend failure: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    finally:
        if trace_handle is not None:
            trace_handle.close()

    if out:
        report.save(out)
    click.echo(
        f"method: {report.method}  accuracy: {report.accuracy:.4f}  "
        f"mean steps/task: {report.mean_steps:.2f}  "
        f"mean steps/chain: {report.mean_steps_per_chain:.2f}"
    )
    failures = [r for r in report.records if r.error]
    if failures:
        click.echo(f"tasks with backend failures: {len(failures)}", err=True)
    sys.exit(EXIT_OK)


@main.command("trace")
@click.argument("source")
@click.option("--out", default=None, help="Re-export the trace JSONL here.")
@click.option("--summary/--no-summary", default=True, help="Print aggregate statistics.")
def trace_command(source, out, summary) -> None:
    """Inspect or re-export a saved trace."""
    try:
        rows = read_trace(source)
    except OSError as exc:
        click.echo(f"dataset error: cannot read {source}: {exc}", err=True)
        sys.exit(EXIT_DATASET)
    except json.JSONDecodeError as exc:
        click.echo(f"dataset error: bad trace line: {exc}", err=True)
        sys.exit(EXIT_DATASET)
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            for row in rows:
                handle.write(json.dumps(row) + "\n")
    if summary:
        click.echo(format_summary(summarize_trace(rows)), nl=False)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
