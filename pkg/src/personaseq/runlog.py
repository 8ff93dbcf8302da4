"""JSONL run logs: a header line, one line per decision cycle, an end marker.

A log without its end marker is a checkpoint: the cycles it holds can be
replayed into the engine to resume the run.
"""

from __future__ import annotations

import json
from pathlib import Path

from personaseq.engine import DecisionCycleRecord, RunRecord
from personaseq.persona import BASELINE, Direction, PersonaCondition, Trait
from personaseq.schedgen import schedule_from_dict, schedule_to_dict

SCHEMA_VERSION = 1


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False) + "\n"


class RunLogWriter:
    """Appends one run's records; the file is flushed after every cycle."""

    def __init__(self, path, run_header: dict, resume: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if resume and self.path.exists():
            self._fh = self.path.open("a", encoding="utf-8")
        else:
            self._fh = self.path.open("w", encoding="utf-8")
            self._write(run_header)

    def _write(self, record: dict):
        self._fh.write(_dump(record))
        self._fh.flush()

    def cycle(self, rec: DecisionCycleRecord):
        self._write({"type": "cycle", **rec.to_dict()})

    def end(self, run: RunRecord):
        self._write({"type": "end", "completed_order": run.completed_order,
                     "forced": run.forced_count})

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_header(schedule, condition: PersonaCondition, model_id: str, temperature: float,
                template_version: str, extra: dict | None = None) -> dict:
    return {
        "type": "header",
        "schema_version": SCHEMA_VERSION,
        "template_version": template_version,
        "schedule": schedule_to_dict(schedule),
        "condition": condition.label,
        "statement": condition.statement,
        "model_id": model_id,
        "temperature": temperature,
        **(extra or {}),
    }


def _condition(label: str, statement: str) -> PersonaCondition:
    # keep the logged statement verbatim; the lexicon may have changed since
    if label == "baseline":
        return BASELINE
    trait, direction = label.split(":")
    return PersonaCondition(Trait(trait), Direction(direction), statement)


def read_header(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
    if header.get("type") != "header":
        raise ValueError(f"{path}: first line is not a run header")
    return header


def read_run_log(path, catalog=None) -> tuple[RunRecord, bool]:
    """Parse a log into a RunRecord; the flag says whether the run finished.

    A truncated trailing line (crash mid-write) is ignored.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ValueError(f"{path}: first line is not a run header")
    run = RunRecord(schedule_from_dict(header["schedule"], catalog),
                    _condition(header["condition"], header.get("statement", "")),
                    header["model_id"], float(header["temperature"]))
    done = False
    for line in lines[1:]:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            break
        if rec["type"] == "cycle":
            run.cycles.append(DecisionCycleRecord.from_dict(rec))
        elif rec["type"] == "end":
            done = True
    return run, done
