"""Experiment orchestration over the schedule x condition x model x temperature matrix.

Each matrix cell is one run, logged to ``runs/<key>.jsonl``. Progress goes to
an append-only ``manifest.jsonl`` journal, so an interrupted experiment picks
up where it stopped; ``manifest.json`` is the final snapshot.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

from personaseq import report
from personaseq.agents import (
    AgentConfig,
    ChatAgent,
    RateLimiter,
    ReplayAgent,
    ScriptedAgent,
    TranscriptIndex,
    policy_for,
)
from personaseq.engine import PROMPT_TEMPLATE_VERSION, EngineConfig, RetryPolicy, run_schedule
from personaseq.errors import ConfigurationError, ContractViolation, PersonaSeqError, RunAborted
from personaseq.persona import condition_from_label, enumerate_conditions
from personaseq.runlog import RunLogWriter, make_header, read_run_log
from personaseq.schedgen import GenerationParams, generate_schedules, import_schedules, write_schedules
from personaseq.seqmetrics import METRIC_ORIENTATION, DeltaAggregate, aggregate_deltas
from personaseq.stats import kde

log = logging.getLogger(__name__)

TEMPERATURE_GRID = tuple(round(0.2 * i, 1) for i in range(9))  # 0.0 .. 1.6
ALL_CONDITIONS = tuple(c.label for c in enumerate_conditions())

PENDING, DONE, ABORTED = "pending", "done", "aborted"


# --- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    schedules: dict = field(default_factory=lambda: {"count": 500, "seed": 1})  # or {"path": ...}
    conditions: tuple = ALL_CONDITIONS
    models: tuple = (AgentConfig(),)
    temperatures: tuple = TEMPERATURE_GRID
    output_dir: str = "results"
    parallelism: int = 4
    alpha: float = 0.05
    m: int = 50
    max_retries: int = 3

    def __post_init__(self):
        src = self.schedules
        if "path" not in src and int(src.get("count", 0)) < 1:
            raise ConfigurationError("schedules.count must be at least 1 (or give schedules.path)")
        if not self.conditions:
            raise ConfigurationError("no conditions selected")
        for label in self.conditions:
            condition_from_label(label)
        if len(set(self.conditions)) != len(self.conditions):
            raise ConfigurationError("duplicate conditions")
        if not self.models:
            raise ConfigurationError("no models configured")
        ids = [mc.model_id for mc in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("model_id values must be unique")
        if not self.temperatures or any(not 0.0 <= t <= 2.0 for t in self.temperatures):
            raise ConfigurationError("temperatures must be non-empty and within [0.0, 2.0]")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be at least 1")
        if not 0 < self.alpha < 1 or self.m < 1:
            raise ConfigurationError("alpha must lie in (0, 1) and m must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kw = dict(data)
        if "models" in kw:
            try:
                kw["models"] = tuple(AgentConfig(**m) for m in kw["models"])
            except TypeError as exc:
                raise ConfigurationError(f"bad model entry: {exc}") from None
        for key in ("conditions", "temperatures"):
            if key in kw:
                kw[key] = tuple(kw[key])
        if "temperatures" in kw:
            kw["temperatures"] = tuple(float(t) for t in kw["temperatures"])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "schedules": self.schedules,
            "conditions": list(self.conditions),
            "models": [m.to_dict() for m in self.models],
            "temperatures": list(self.temperatures),
            "output_dir": self.output_dir,
            "parallelism": self.parallelism,
            "alpha": self.alpha,
            "m": self.m,
            "max_retries": self.max_retries,
        }

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("parallelism")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def load_schedules(config: ExperimentConfig):
    src = config.schedules
    if "path" in src:
        return import_schedules(src["path"])
    params = GenerationParams(**src.get("params", {}))
    return generate_schedules(int(src["count"]), int(src.get("seed", 1)), params)


# --- matrix --------------------------------------------------------------------

def cache_key(schedule_id: str, condition: str, model_id: str, temperature: float,
              template_version: str = PROMPT_TEMPLATE_VERSION) -> str:
    text = "\x1f".join([schedule_id, condition, model_id, repr(float(temperature)), template_version])
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:20]


@dataclass(frozen=True)
class Cell:
    schedule_id: str
    condition: str
    model_id: str
    temperature: float

    @property
    def key(self) -> str:
        return cache_key(self.schedule_id, self.condition, self.model_id, self.temperature)

    def to_dict(self) -> dict:
        return {"schedule_id": self.schedule_id, "condition": self.condition,
                "model_id": self.model_id, "temperature": self.temperature}


def build_matrix(config: ExperimentConfig, schedules) -> list[Cell]:
    return [Cell(s.schedule_id, label, mc.model_id, float(t))
            for mc in config.models for t in config.temperatures
            for label in config.conditions for s in schedules]


def estimate_requests(config: ExperimentConfig, schedules=None, skip=frozenset()) -> int:
    """Decision cycles still to run, i.e. the minimum number of agent requests."""
    schedules = schedules if schedules is not None else load_schedules(config)
    sizes = {s.schedule_id: len(s) for s in schedules}
    return sum(sizes[c.schedule_id] for c in build_matrix(config, schedules) if c.key not in skip)


# --- manifest ------------------------------------------------------------------

class Manifest:
    """Cell statuses, journalled append-only; only the coordinating thread writes."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.journal = self.directory / "manifest.jsonl"
        self.status: dict[str, str] = {}
        self.errors: dict[str, str] = {}
        if self.journal.exists():
            for line in self.journal.read_text(encoding="utf-8").splitlines():
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn final line
                self.status[rec["key"]] = rec["status"]
                if rec.get("error"):
                    self.errors[rec["key"]] = rec["error"]
        self._lock = threading.Lock()

    def mark(self, cell: Cell, status: str, error: str | None = None):
        prev = self.status.get(cell.key)
        allowed = {None: {PENDING}, PENDING: {DONE, ABORTED, PENDING}, ABORTED: {PENDING}, DONE: set()}
        if status not in allowed[prev]:
            raise ContractViolation(f"cell {cell.key}: illegal transition {prev} -> {status}")
        rec = {"key": cell.key, "status": status, **cell.to_dict()}
        if error:
            rec["error"] = error
        with self._lock, self.journal.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")
        self.status[cell.key] = status
        if error:
            self.errors[cell.key] = error

    def snapshot(self, cells: list[Cell], config_hash: str) -> dict:
        counts = {PENDING: 0, DONE: 0, ABORTED: 0}
        entries = []
        for c in cells:
            st = self.status.get(c.key, PENDING)
            counts[st] += 1
            entry = {"key": c.key, **c.to_dict(), "status": st, "log": f"runs/{c.key}.jsonl"}
            if st == ABORTED and c.key in self.errors:
                entry["error"] = self.errors[c.key]
            entries.append(entry)
        return {"config_hash": config_hash, "template_version": PROMPT_TEMPLATE_VERSION,
                "counts": counts, "cells": entries}


# --- agents --------------------------------------------------------------------

class AgentFactory:
    def __init__(self, config: ExperimentConfig):
        self.models = {mc.model_id: mc for mc in config.models}
        self._limiters = {mid: RateLimiter(mc.rate_limit) for mid, mc in self.models.items()
                          if mc.backend == "chat"}
        self._chat: dict[tuple, ChatAgent] = {}
        self._indexes: dict[str, TranscriptIndex] = {}
        self._lock = threading.Lock()

    def agent(self, cell: Cell):
        mc = self.models[cell.model_id]
        if mc.backend == "scripted":
            return ScriptedAgent(policy_for(cell.condition, mc, cell.temperature))
        if mc.backend == "replay":
            with self._lock:
                if cell.model_id not in self._indexes:
                    if not mc.transcripts:
                        raise ConfigurationError(f"model {cell.model_id}: replay backend needs 'transcripts'")
                    self._indexes[cell.model_id] = TranscriptIndex(mc.transcripts)
            transcript = self._indexes[cell.model_id].load(cell.schedule_id, cell.condition,
                                                           cell.model_id, cell.temperature)
            return ReplayAgent(transcript)
        with self._lock:
            key = (cell.model_id, cell.temperature)
            if key not in self._chat:
                cfg = dataclasses.replace(mc, temperature=cell.temperature)
                self._chat[key] = ChatAgent(cfg, limiter=self._limiters[cell.model_id])
            return self._chat[key]

    def close(self):
        for agent in self._chat.values():
            agent.close()


# --- execution -----------------------------------------------------------------

@dataclass
class ExperimentResult:
    output_dir: Path
    manifest: dict
    runs: list = field(default_factory=list)
    records: list = field(default_factory=list)
    executed: int = 0

    @property
    def exit_code(self) -> int:
        counts = self.manifest["counts"]
        return 1 if counts[ABORTED] or counts[PENDING] else 0


def _execute_cell(cell: Cell, schedule, factory: AgentFactory, runs_dir: Path, max_retries: int):
    path = runs_dir / f"{cell.key}.jsonl"
    condition = condition_from_label(cell.condition)
    prior = ()
    if path.exists():
        logged, done = read_run_log(path)
        if done:
            return logged
        prior = tuple(logged.cycles)  # checkpoint from an interrupted attempt
    engine = EngineConfig(cell.model_id, cell.temperature, RetryPolicy(max_retries))
    header = make_header(schedule, condition, cell.model_id, cell.temperature, PROMPT_TEMPLATE_VERSION,
                         {"cache_key": cell.key})
    # rewrite rather than append so a torn trailing line never survives
    with RunLogWriter(path, header) as writer:
        for rec in prior:
            writer.cycle(rec)
        run = run_schedule(schedule, condition, factory.agent(cell), engine, prior, writer.cycle)
        writer.end(run)
    return run


def _run_sort_key(run):
    return (run.model_id, float(run.temperature), report._condition_rank(run.condition.label), run.schedule_id)


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentResult:
    """Run every cell not already done, then write all analysis artifacts."""
    out = Path(config.output_dir)
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    schedules = load_schedules(config)
    write_schedules(out / "schedules.json", schedules)
    by_id = {s.schedule_id: s for s in schedules}
    cells = build_matrix(config, schedules)
    manifest = Manifest(out)
    todo = [c for c in cells if manifest.status.get(c.key) != DONE]
    for c in todo:
        if manifest.status.get(c.key) != PENDING:
            manifest.mark(c, PENDING)

    factory = AgentFactory(config)
    runs: dict[str, object] = {}
    try:
        workers = min(config.parallelism, max(1, len(todo)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_execute_cell, c, by_id[c.schedule_id], factory, runs_dir,
                                   config.max_retries): c for c in todo}
            for n, fut in enumerate(as_completed(futures), 1):
                cell = futures[fut]
                try:
                    runs[cell.key] = fut.result()
                except (RunAborted, PersonaSeqError) as exc:
                    log.error("cell %s aborted: %s", cell.key, exc)
                    manifest.mark(cell, ABORTED, str(exc))
                else:
                    manifest.mark(cell, DONE)
                if progress is not None:
                    progress(n, len(todo))
    finally:
        factory.close()

    for c in cells:
        if manifest.status.get(c.key) == DONE and c.key not in runs:
            runs[c.key] = read_run_log(runs_dir / f"{c.key}.jsonl")[0]
    snapshot = manifest.snapshot(cells, config.config_hash())
    (out / "manifest.json").write_text(json.dumps(snapshot, indent=2) + "\n", encoding="utf-8")

    done_runs = sorted(runs.values(), key=_run_sort_key)
    records = write_analysis(out, done_runs, config.alpha, config.m)
    return ExperimentResult(out, snapshot, done_runs, records, executed=len(todo))


# --- analysis artifacts --------------------------------------------------------

METRICS_COLUMNS = ["schedule_id", "condition", "model_id", "temperature", "metric", "orientation", "raw", "normalized"]


def _num(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def metrics_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for r in records:
        for m, orient in METRIC_ORIENTATION.items():
            w.writerow([r.schedule_id, r.condition, r.model_id, _num(r.temperature), m, orient,
                        _num(r.raw[m]), _num(r.values[m])])
    return buf.getvalue()


def metrics_wide_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schedule_id", "condition", "model_id", "temperature", *METRIC_ORIENTATION])
    for r in records:
        w.writerow([r.schedule_id, r.condition, r.model_id, _num(r.temperature),
                    *(_num(r.values[m]) for m in METRIC_ORIENTATION)])
    return buf.getvalue()


def read_metrics_csv(path) -> list[report.MetricRecord]:
    """Inverse of :func:`metrics_csv` (long format)."""
    groups: dict[tuple, tuple[dict, dict]] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["schedule_id"], row["condition"], row["model_id"], float(row["temperature"]))
            values, raw = groups.setdefault(key, ({}, {}))
            values[row["metric"]] = float(row["normalized"])
            raw[row["metric"]] = float(row["raw"])
    return [report.MetricRecord(*k, values=v, raw=r) for k, (v, r) in groups.items()]


def _groups(items, key):
    out: dict = {}
    for it in items:
        out.setdefault(key(it), []).append(it)
    return out


def delta_aggregates(runs) -> list[tuple[str, float, DeltaAggregate]]:
    out = []
    for (mid, t), group in _groups(runs, lambda r: (r.model_id, float(r.temperature))).items():
        aggs = aggregate_deltas(group)
        aggs.sort(key=lambda a: (report._condition_rank(a.condition), a.task_name))
        out += [(mid, t, a) for a in aggs]
    return out


def deltas_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model_id", "temperature", "condition", "task_name", "mean", "std", "count"])
    for mid, t, a in rows:
        w.writerow([mid, _num(t), a.condition, a.task_name, _num(a.mean), _num(a.std), a.count])
    return buf.getvalue()


def read_deltas_csv(path) -> list[tuple[str, float, DeltaAggregate]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [(r["model_id"], float(r["temperature"]),
                 DeltaAggregate(r["task_name"], r["condition"], float(r["mean"]), float(r["std"]), int(r["count"])))
                for r in csv.DictReader(fh)]


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text)


def write_analysis(out: Path, runs, alpha: float, m: int) -> list[report.MetricRecord]:
    """metrics, deltas, then every table and figure derived from them."""
    records = [report.metric_record(r) for r in runs]
    deltas = delta_aggregates(runs)
    (out / "metrics.csv").write_text(metrics_csv(records), encoding="utf-8")
    (out / "metrics_wide.csv").write_text(metrics_wide_csv(records), encoding="utf-8")
    (out / "deltas.csv").write_text(deltas_csv(deltas), encoding="utf-8")
    write_reports(out, records, deltas, alpha, m)
    return records


def write_reports(out: Path, records, deltas, alpha: float, m: int) -> None:
    tables, figures = out / "tables", out / "figures"
    tables.mkdir(parents=True, exist_ok=True)
    figures.mkdir(parents=True, exist_ok=True)
    sig_parts = []
    cells = sorted({(r.model_id, r.temperature) for r in records})
    for mid, t in cells:
        stem = f"{_slug(mid)}_t{t:.1f}"
        rows = report.build_condition_table(records, mid, t)
        title = f"{mid}, temperature {t:.1f}"
        (tables / f"conditions_{stem}.csv").write_text(report.table_to_csv(rows), encoding="utf-8")
        (tables / f"conditions_{stem}.txt").write_text(report.table_to_text(rows, title=title), encoding="utf-8")
        results = report.significance_table(records, mid, t, alpha, m)
        if results:
            sig_parts.append(report.significance_to_csv(results, mid, t))
            (tables / f"significance_{stem}.txt").write_text(
                f"{title} (threshold {results[0].threshold:g}; * = not significant)\n"
                + report.significance_to_text(results), encoding="utf-8")
        for metric in report.TABLE_METRICS:
            curves = []
            for label in sorted({r.condition for r in records}, key=report._condition_rank):
                vals = [r.values[metric] for r in records
                        if r.model_id == mid and r.temperature == t and r.condition == label]
                if len(vals) >= 2:
                    curves.append((label, kde(vals)))
            if curves:
                (figures / f"kde_{stem}_{metric}.svg").write_text(
                    report.emit_svg(curves, title=f"{metric.upper()}: {title}"), encoding="utf-8")
        aggs = [a for dm, dt, a in deltas if dm == mid and dt == t]
        for label in sorted({a.condition for a in aggs}, key=report._condition_rank):
            series = report.delta_chart_from_aggregates(aggs, label, report.default_highlight(label))
            (figures / f"deltas_{stem}_{_slug(label)}.svg").write_text(report.emit_svg(series), encoding="utf-8")
    # header once, then each block's rows
    lines = []
    for i, part in enumerate(sig_parts):
        lines += part.splitlines(keepends=True)[(1 if i else 0):]
    if lines:
        (out / "significance.csv").write_text("".join(lines), encoding="utf-8")
    for mid in sorted({r.model_id for r in records}):
        if len({r.temperature for r in records if r.model_id == mid and r.condition == "baseline"}) >= 2:
            rows = report.build_temperature_table(records, mid)
            (tables / f"temperature_sweep_{_slug(mid)}.csv").write_text(report.table_to_csv(rows), encoding="utf-8")
            (tables / f"temperature_sweep_{_slug(mid)}.txt").write_text(
                report.table_to_text(rows, title=f"{mid}, baseline across temperatures"), encoding="utf-8")


# --- pipelines -----------------------------------------------------------------

@dataclass
class SweepResult:
    experiment: ExperimentResult
    tables: dict  # model_id -> list of ConditionTableRow, one per temperature


def sweep_temperature(config: ExperimentConfig, progress=None) -> SweepResult:
    if tuple(config.conditions) != ("baseline",):
        raise ContractViolation("a temperature sweep runs the baseline condition only")
    if len(set(config.temperatures)) < 2:
        raise ContractViolation("a temperature sweep needs at least two temperatures")
    result = run_experiment(config, progress)
    tables = {mc.model_id: report.build_temperature_table(result.records, mc.model_id) for mc in config.models}
    return SweepResult(result, tables)


def load_logs(directory) -> list:
    """Finished runs from every log under ``directory``; unfinished logs are skipped."""
    runs = []
    for path in sorted(Path(directory).glob("*.jsonl")):
        run, done = read_run_log(path)
        if done:
            runs.append(run)
        else:
            log.warning("%s: run not finished, skipped", path)
    return sorted(runs, key=_run_sort_key)


def analyze_logs(log_dir, out_dir, alpha: float = 0.05, m: int = 50) -> list[report.MetricRecord]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return write_analysis(out, load_logs(log_dir), alpha, m)


def report_from_csv(out_dir, alpha: float = 0.05, m: int = 50) -> None:
    out = Path(out_dir)
    write_reports(out, read_metrics_csv(out / "metrics.csv"), read_deltas_csv(out / "deltas.csv"), alpha, m)


def replay_logs(log_dir, out_dir, alpha: float = 0.05, m: int = 50):
    """Re-drive the engine from recorded replies and re-derive every artifact.

    Returns the replayed runs and the keys of any whose order differs from the log.
    """
    replayed, mismatched = [], []
    for run in load_logs(log_dir):
        again = run_schedule(run.schedule, run.condition, ReplayAgent(run),
                             EngineConfig(run.model_id, run.temperature))
        if again.completed_order != run.completed_order:
            mismatched.append((run.schedule_id, run.condition.label, run.model_id, run.temperature))
        replayed.append(again)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_analysis(out, replayed, alpha, m)
    return replayed, mismatched
