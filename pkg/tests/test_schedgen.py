import dataclasses
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from personaseq.errors import (
    ConfigurationError,
    InvalidInputError,
    ScheduleParseError,
    ScheduleValidationError,
)
from personaseq.schedgen import (
    GenerationParams,
    TaskCatalog,
    compute_uid,
    default_catalog,
    dumps_schedules,
    generate_schedule,
    generate_schedules,
    import_schedules,
    loads_schedules,
    make_task,
    validate_schedule,
    write_schedules,
)
from personaseq.timeofday import advance_clock, format_hhmm, parse_hhmm

# first 16 hex chars of SHA-512, computed with `openssl dgst -sha512`
GOLDEN_UIDS = {
    ("Work", "09:00"): "f27a7633d57b4d88",
    ("Work", "09:01"): "05fef6a25f9edcb0",
    ("Team Collaboration", "13:45"): "dd04ddd28518ecea",
}

PAPER_TASKS = {
    "Work", "Email", "Planning", "Meeting", "Research", "Team Collaboration", "Call",
    "Social Media", "Coffee Break", "Break", "Lunch", "Personal Time", "Reflective Time",
    "Reading", "Exercise",
}


@pytest.mark.parametrize("key", sorted(GOLDEN_UIDS))
def test_uid_golden(key):
    name, hhmm = key
    assert compute_uid(name, parse_hhmm(hhmm)) == GOLDEN_UIDS[key]


def test_uid_deterministic_and_time_sensitive():
    assert compute_uid("Work", 540) == compute_uid("Work", 540)
    assert compute_uid("Work", 540) != compute_uid("Work", 541)


def test_uid_rejects_empty_name():
    with pytest.raises(InvalidInputError):
        compute_uid("", 540)


def test_default_catalog_names_and_tags():
    cat = default_catalog()
    assert set(cat.names) == PAPER_TASKS and len(cat.names) == 15
    assert set(cat.names_with("work")) == {"Email", "Planning", "Work", "Team Collaboration", "Meeting", "Research"}
    assert set(cat.names_with("social")) == {"Team Collaboration", "Meeting", "Call", "Social Media"}


def test_generation_is_deterministic():
    assert dumps_schedules([generate_schedule(1)]) == dumps_schedules([generate_schedule(1)])


def test_generation_forced_length():
    s = generate_schedule(1, GenerationParams(min_tasks=10, max_tasks=10))
    assert len(s) == 10


def test_generation_rejects_inverted_range():
    with pytest.raises(ConfigurationError):
        generate_schedule(1, GenerationParams(min_tasks=5, max_tasks=4))


def test_five_hundred_schedules_vary_and_validate():
    schedules = generate_schedules(500, seed=1)
    assert len({len(s) for s in schedules}) >= 2
    assert len({s.start_time for s in schedules}) >= 2
    params = GenerationParams()
    lo, hi = parse_hhmm(params.window_start), parse_hhmm(params.window_end)
    for s in schedules:
        assert validate_schedule(s, params=params) == []
        assert lo <= s.start_time <= hi and (s.start_time - lo) % 15 == 0
        for t in s.tasks:
            assert compute_uid(t.name, t.start) == t.uid
            assert t.categories == default_catalog().categories(t.name)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_bytes(seed):
    text = dumps_schedules([generate_schedule(seed)])
    assert dumps_schedules(loads_schedules(text)) == text


def test_file_round_trip(tmp_path):
    schedules = generate_schedules(5)
    path = tmp_path / "s.json"
    write_schedules(path, schedules)
    assert import_schedules(path) == schedules


def test_corrupted_uid_reported_once():
    s = generate_schedule(3)
    t = s.tasks[2]
    bad = dataclasses.replace(t, uid="0" * 16)
    s2 = dataclasses.replace(s, tasks=s.tasks[:2] + (bad,) + s.tasks[3:])
    problems = validate_schedule(s2)
    assert len(problems) == 1 and "uid mismatch" in problems[0]


def test_same_start_reported_as_one_overlap():
    s = next(x for x in generate_schedules(50) if x.tasks[0].name != x.tasks[1].name)
    moved = make_task(s.tasks[1].name, s.tasks[0].start, s.tasks[1].duration)
    s2 = dataclasses.replace(s, tasks=(s.tasks[0], moved) + s.tasks[2:])
    problems = validate_schedule(s2)
    assert len(problems) == 1 and "overlap" in problems[0]


def test_unknown_name_and_duplicate_uid():
    a = make_task("Work", 540, 30)
    b = make_task("Nap", 570, 30)
    from personaseq.schedgen import Schedule
    problems = validate_schedule(Schedule("x", 540, (a, b, a)))
    assert any("unknown task name" in p for p in problems)
    assert any("duplicate uid" in p for p in problems)


def test_import_missing_uid_names_field(tmp_path):
    data = json.loads(dumps_schedules([generate_schedule(1)]))
    del data[0]["tasks"][0]["uid"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ScheduleParseError, match="'uid'"):
        import_schedules(path)


def test_import_empty_tasks(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps([{"schedule_id": "e", "start_time": "09:00", "tasks": []}]))
    with pytest.raises(ScheduleValidationError) as err:
        import_schedules(path)
    assert err.value.failures == [(0, ["schedule has zero tasks"])]


def test_custom_catalog(tmp_path):
    path = tmp_path / "cat.json"
    path.write_text(json.dumps({
        "Deep Work": {"categories": ["work"], "duration_min": 60, "duration_max": 60, "weight": 1},
        "Walk": {"categories": ["personal"], "duration_min": 20, "duration_max": 20, "weight": 1},
    }))
    cat = TaskCatalog.load(path)
    s = generate_schedule(4, GenerationParams(min_tasks=3, max_tasks=3, catalog=cat))
    assert {t.name for t in s.tasks} <= {"Deep Work", "Walk"}
    assert validate_schedule(s, cat) == []
    assert validate_schedule(s) != []  # unknown to the default catalog


def test_catalog_rejects_bad_entries():
    with pytest.raises(ConfigurationError):
        TaskCatalog.from_dict({"X": {"categories": ["chores"], "duration_min": 1, "duration_max": 2, "weight": 1}})
    with pytest.raises(ConfigurationError):
        TaskCatalog.from_dict({"X": {"categories": ["work"], "duration_min": 1, "weight": 1}})


def test_clock_arithmetic():
    assert format_hhmm(advance_clock(parse_hhmm("09:00"), 30)) == "09:30"
    assert format_hhmm(advance_clock(parse_hhmm("23:50"), 20)) == "00:10"
    with pytest.raises(ValueError):
        advance_clock(540, 0)
    with pytest.raises(InvalidInputError):
        parse_hhmm("9:00")
