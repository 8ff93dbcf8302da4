import json

from conftest import FailingAgent, FirstPendingAgent, ReverseAgent

from personaseq.engine import PROMPT_TEMPLATE_VERSION, run_schedule
from personaseq.errors import RunAborted
from personaseq.persona import BASELINE, condition_from_label
from personaseq.runlog import RunLogWriter, make_header, read_header, read_run_log
from personaseq.schedgen import generate_schedule


def _write(path, run, header):
    with RunLogWriter(path, header) as w:
        for rec in run.cycles:
            w.cycle(rec)
        w.end(run)


def test_round_trip(tmp_path):
    s = generate_schedule(4)
    cond = condition_from_label("neuroticism:reverse")
    run = run_schedule(s, cond, ReverseAgent())
    path = tmp_path / "r.jsonl"
    _write(path, run, make_header(s, cond, "m", 0.4, PROMPT_TEMPLATE_VERSION))
    back, done = read_run_log(path)
    assert done
    assert back.schedule == s and back.condition == cond
    assert back.cycles == run.cycles and back.completed_order == run.completed_order
    lines = path.read_text().splitlines()
    assert len(lines) == len(s) + 2
    assert json.loads(lines[0])["statement"] == cond.statement
    assert read_header(path)["template_version"] == PROMPT_TEMPLATE_VERSION


def test_logged_statement_survives_lexicon_changes(tmp_path):
    s = generate_schedule(4)
    cond = condition_from_label("openness:forward")
    custom = type(cond)(cond.trait, cond.direction, "Imagine you are a tinkerer.")
    path = tmp_path / "r.jsonl"
    _write(path, run_schedule(s, custom, FirstPendingAgent()), make_header(s, custom, "m", 0.0, "1"))
    assert read_run_log(path)[0].condition.statement == "Imagine you are a tinkerer."


def test_checkpoint_resume_from_partial_log(tmp_path):
    s = generate_schedule(6)
    path = tmp_path / "r.jsonl"
    header = make_header(s, BASELINE, "m", 0.0, "1")
    w = RunLogWriter(path, header)
    try:
        run_schedule(s, BASELINE, FailingAgent(3), on_cycle=w.cycle)
    except RunAborted as exc:
        assert len(exc.checkpoint.cycles) == 3
    w.close()
    with path.open("a") as fh:
        fh.write('{"type": "cycle", "cycle_in')  # torn write
    partial, done = read_run_log(path)
    assert not done and len(partial.cycles) == 3
    with RunLogWriter(path, header, resume=True) as w2:
        full = run_schedule(s, BASELINE, FirstPendingAgent(), prior_cycles=partial.cycles)
        w2.end(full)
    assert full.completed_order == s.uids
