"""Work-day schedules: generation, validation, JSON round-trip and import."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from personaseq.errors import (
    ConfigurationError,
    InvalidInputError,
    ScheduleParseError,
    ScheduleValidationError,
)
from personaseq.timeofday import MINUTES_PER_DAY, format_hhmm, parse_hhmm

UID_LENGTH = 16
CATEGORY_TAGS = ("work", "social", "personal")


def compute_uid(name: str, start: int) -> str:
    """First 16 hex chars of SHA-512 over ``"{name}|HH:MM"`` (UTF-8)."""
    if not name:
        raise InvalidInputError("task name must be non-empty")
    digest = hashlib.sha512(f"{name}|{format_hhmm(start)}".encode("utf-8")).hexdigest()
    return digest[:UID_LENGTH]


@dataclass(frozen=True)
class CatalogEntry:
    categories: frozenset
    duration_min: int
    duration_max: int
    weight: float


class TaskCatalog:
    """Ordered map of task name to category tags, duration range and sampling weight."""

    def __init__(self, entries: dict[str, CatalogEntry]):
        if not entries:
            raise ConfigurationError("task catalog is empty")
        for name, e in entries.items():
            if not e.categories or not set(e.categories) <= set(CATEGORY_TAGS):
                raise ConfigurationError(f"{name}: categories must be a non-empty subset of {CATEGORY_TAGS}")
            if not 1 <= e.duration_min <= e.duration_max:
                raise ConfigurationError(f"{name}: bad duration range {e.duration_min}-{e.duration_max}")
            if e.weight <= 0:
                raise ConfigurationError(f"{name}: weight must be positive")
        self.entries = dict(entries)

    @classmethod
    def from_dict(cls, data: dict) -> "TaskCatalog":
        try:
            entries = {
                name: CatalogEntry(
                    categories=frozenset(spec["categories"]),
                    duration_min=int(spec["duration_min"]),
                    duration_max=int(spec["duration_max"]),
                    weight=float(spec["weight"]),
                )
                for name, spec in data.items()
            }
        except KeyError as exc:
            raise ConfigurationError(f"catalog entry missing field {exc}") from None
        return cls(entries)

    @classmethod
    def load(cls, path) -> "TaskCatalog":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "TaskCatalog":
        text = resources.files("personaseq").joinpath("data/catalog.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            name: {
                "categories": sorted(e.categories),
                "duration_min": e.duration_min,
                "duration_max": e.duration_max,
                "weight": e.weight,
            }
            for name, e in self.entries.items()
        }

    @property
    def names(self) -> list[str]:
        return list(self.entries)

    def __contains__(self, name) -> bool:
        return name in self.entries

    def categories(self, name: str) -> frozenset:
        return self.entries[name].categories

    def names_with(self, tag: str) -> list[str]:
        return [n for n, e in self.entries.items() if tag in e.categories]


_DEFAULT_CATALOG: TaskCatalog | None = None


def default_catalog() -> TaskCatalog:
    global _DEFAULT_CATALOG
    if _DEFAULT_CATALOG is None:
        _DEFAULT_CATALOG = TaskCatalog.default()
    return _DEFAULT_CATALOG


@dataclass(frozen=True)
class Task:
    name: str
    start: int  # minutes since midnight
    duration: int  # minutes
    uid: str
    categories: frozenset = field(default=frozenset(), compare=False)


def make_task(name: str, start: int, duration: int, catalog: TaskCatalog | None = None) -> Task:
    catalog = catalog or default_catalog()
    cats = catalog.categories(name) if name in catalog else frozenset()
    return Task(name, start, duration, compute_uid(name, start), cats)


@dataclass(frozen=True)
class Schedule:
    schedule_id: str
    start_time: int
    tasks: tuple

    def __len__(self):
        return len(self.tasks)

    @property
    def uids(self) -> list[str]:
        return [t.uid for t in self.tasks]

    @property
    def total_duration(self) -> int:
        return sum(t.duration for t in self.tasks)


@dataclass(frozen=True)
class GenerationParams:
    min_tasks: int = 8
    max_tasks: int = 20
    window_start: str = "07:00"
    window_end: str = "10:00"
    start_step: int = 15
    duration_step: int = 5
    id_prefix: str = "s"
    catalog: TaskCatalog | None = field(default=None, compare=False)

    def resolved_catalog(self) -> TaskCatalog:
        return self.catalog or default_catalog()

    def to_dict(self) -> dict:
        return {
            "min_tasks": self.min_tasks,
            "max_tasks": self.max_tasks,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "start_step": self.start_step,
            "duration_step": self.duration_step,
            "id_prefix": self.id_prefix,
            "catalog": self.resolved_catalog().to_dict(),
        }


_MAX_DURATION_DRAWS = 1000


def generate_schedule(seed: int, params: GenerationParams | None = None) -> Schedule:
    """Draw a back-to-back schedule; a pure function of ``(seed, params)``.

    Durations are redrawn when the day would run past midnight.
    """
    params = params or GenerationParams()
    catalog = params.resolved_catalog()
    if params.min_tasks < 1 or params.min_tasks > params.max_tasks:
        raise ConfigurationError(f"need 1 <= min_tasks <= max_tasks, got {params.min_tasks}..{params.max_tasks}")
    lo, hi = parse_hhmm(params.window_start), parse_hhmm(params.window_end)
    if hi < lo or params.start_step < 1 or params.duration_step < 1:
        raise ConfigurationError("bad start window or step")
    shortest = min(e.duration_min for e in catalog.entries.values())
    if lo + params.min_tasks * shortest > MINUTES_PER_DAY:
        raise ConfigurationError("min_tasks cannot fit in one day")

    rng = np.random.default_rng(seed)
    n = int(rng.integers(params.min_tasks, params.max_tasks + 1))
    start = lo + params.start_step * int(rng.integers(0, (hi - lo) // params.start_step + 1))
    names = catalog.names
    weights = np.array([catalog.entries[x].weight for x in names])
    picks = [names[i] for i in rng.choice(len(names), size=n, p=weights / weights.sum())]

    for _ in range(_MAX_DURATION_DRAWS):
        durations = []
        for name in picks:
            e = catalog.entries[name]
            steps = (e.duration_max - e.duration_min) // params.duration_step
            durations.append(e.duration_min + params.duration_step * int(rng.integers(0, steps + 1)))
        if start + sum(durations) <= MINUTES_PER_DAY:
            break
    else:
        raise ConfigurationError(f"seed {seed}: could not fit {n} tasks into one day")

    tasks = []
    clock = start
    for name, dur in zip(picks, durations):
        tasks.append(make_task(name, clock, dur, catalog))
        clock += dur
    return Schedule(f"{params.id_prefix}{seed:04d}", start, tuple(tasks))


def generate_schedules(count: int, seed: int = 1, params: GenerationParams | None = None) -> list[Schedule]:
    return [generate_schedule(seed + i, params) for i in range(count)]


def validate_schedule(s: Schedule, catalog: TaskCatalog | None = None,
                      params: GenerationParams | None = None) -> list[str]:
    """Every invariant violation in ``s``; empty means valid."""
    catalog = catalog or (params.resolved_catalog() if params else default_catalog())
    problems = []
    if not s.tasks:
        return ["schedule has zero tasks"]
    if params and not params.min_tasks <= len(s.tasks) <= params.max_tasks:
        problems.append(f"length {len(s.tasks)} outside [{params.min_tasks}, {params.max_tasks}]")
    if s.tasks[0].start != s.start_time:
        problems.append(f"first task starts at {format_hhmm(s.tasks[0].start)} "
                        f"but schedule starts at {format_hhmm(s.start_time)}")
    seen = {}
    for i, t in enumerate(s.tasks):
        if t.name not in catalog:
            problems.append(f"task {i}: unknown task name {t.name!r}")
        elif t.categories and t.categories != catalog.categories(t.name):
            problems.append(f"task {i}: categories do not match catalog")
        if t.duration < 1:
            problems.append(f"task {i}: duration must be at least 1 minute")
        if t.name and 0 <= t.start < MINUTES_PER_DAY and t.uid != compute_uid(t.name, t.start):
            problems.append(f"task {i}: uid mismatch for {t.name!r} at {format_hhmm(t.start)}")
        if t.uid in seen:
            problems.append(f"task {i}: duplicate uid {t.uid} (also task {seen[t.uid]})")
        seen.setdefault(t.uid, i)
        if i:
            prev = s.tasks[i - 1]
            if t.start < prev.start:
                problems.append(f"task {i}: starts before task {i - 1}")
            elif t.start < prev.start + prev.duration:
                problems.append(f"task {i}: overlap with task {i - 1}")
    return problems


# --- JSON --------------------------------------------------------------------

def schedule_to_dict(s: Schedule) -> dict:
    return {
        "schedule_id": s.schedule_id,
        "start_time": format_hhmm(s.start_time),
        "tasks": [
            {"name": t.name, "start": format_hhmm(t.start), "duration_minutes": t.duration, "uid": t.uid}
            for t in s.tasks
        ],
    }


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ScheduleParseError(f"{where}: expected an object")
    if key not in obj:
        raise ScheduleParseError(f"{where}: missing field {key!r}")
    return obj[key]


def schedule_from_dict(data: dict, catalog: TaskCatalog | None = None, where: str = "schedule") -> Schedule:
    catalog = catalog or default_catalog()
    sid = _require(data, "schedule_id", where)
    try:
        start = parse_hhmm(_require(data, "start_time", where))
    except InvalidInputError as exc:
        raise ScheduleParseError(f"{where}: {exc}") from None
    raw_tasks = _require(data, "tasks", where)
    if not isinstance(raw_tasks, list):
        raise ScheduleParseError(f"{where}: 'tasks' must be a list")
    tasks = []
    for j, rt in enumerate(raw_tasks):
        tw = f"{where}, task {j}"
        name = _require(rt, "name", tw)
        try:
            t_start = parse_hhmm(_require(rt, "start", tw))
        except InvalidInputError as exc:
            raise ScheduleParseError(f"{tw}: {exc}") from None
        dur = _require(rt, "duration_minutes", tw)
        uid = _require(rt, "uid", tw)
        if not isinstance(dur, int) or not isinstance(name, str) or not isinstance(uid, str):
            raise ScheduleParseError(f"{tw}: wrong field type")
        cats = catalog.categories(name) if name in catalog else frozenset()
        tasks.append(Task(name, t_start, dur, uid, cats))
    return Schedule(str(sid), start, tuple(tasks))


def dumps_schedules(schedules) -> str:
    return json.dumps([schedule_to_dict(s) for s in schedules], indent=2) + "\n"


def write_schedules(path, schedules) -> None:
    Path(path).write_text(dumps_schedules(schedules), encoding="utf-8")


def loads_schedules(text: str, catalog: TaskCatalog | None = None,
                    params: GenerationParams | None = None) -> list[Schedule]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScheduleParseError(f"not valid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ScheduleParseError("schedule file must hold a JSON array")
    schedules = [schedule_from_dict(d, catalog, f"schedule {i}") for i, d in enumerate(data)]
    failures = []
    for i, s in enumerate(schedules):
        problems = validate_schedule(s, catalog, params)
        if problems:
            failures.append((i, problems))
    if failures:
        raise ScheduleValidationError(failures)
    return schedules


def import_schedules(path, catalog: TaskCatalog | None = None,
                     params: GenerationParams | None = None) -> list[Schedule]:
    return loads_schedules(Path(path).read_text(encoding="utf-8"), catalog, params)
