import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FailingAgent, FirstPendingAgent, GarbageAgent, ReverseAgent
from personaseq.engine import (
    INSTRUCTIONS,
    CycleState,
    EngineConfig,
    ReplyFailure,
    RetryPolicy,
    assemble_prompt,
    parse_agent_reply,
    run_decision_cycle,
    run_schedule,
)
from personaseq.errors import ContractViolation, RunAborted
from personaseq.persona import BASELINE, Direction, Trait, enumerate_conditions, condition_from_label
from personaseq.schedgen import GenerationParams, generate_schedule, generate_schedules
from personaseq.timeofday import MINUTES_PER_DAY, format_hhmm

AGREEABLE = condition_from_label("agreeableness:forward")


def section(prompt, label):
    body = prompt.split(f"```{label}\n", 1)[1].split("```", 1)[0]
    return [line for line in body.splitlines() if line]


def test_baseline_prompt_starts_with_time():
    s = generate_schedule(1)
    prompt = assemble_prompt(CycleState.initial(s, BASELINE))
    first = next(line for line in prompt.splitlines() if line.strip())
    assert first == f"Current Time: {format_hhmm(s.start_time)}"


def test_persona_prompt_starts_with_statement():
    prompt = assemble_prompt(CycleState.initial(generate_schedule(1), AGREEABLE))
    assert prompt.startswith("Imagine you are an agreeable person")


def test_prompt_component_order_and_instructions():
    s = generate_schedule(2)
    prompt = assemble_prompt(CycleState.initial(s, AGREEABLE))
    order = [prompt.index(x) for x in (AGREEABLE.statement, "Current Time:", "Remaining To-Do List:",
                                        "Completed List:", "Instructions:")]
    assert order == sorted(order)
    assert "select the next task to perform" in prompt
    assert "return only the task UID" in prompt and "no additional information" in prompt
    assert prompt.endswith(INSTRUCTIONS)


def test_prompt_sections_count_entries():
    s = generate_schedule(5, GenerationParams(min_tasks=5, max_tasks=5))
    state = CycleState.initial(s, BASELINE).apply(s.tasks[1].uid).apply(s.tasks[3].uid)
    prompt = assemble_prompt(state)
    todo, done = section(prompt, "TODO"), section(prompt, "COMPLETED")
    assert len(todo) == 3 and len(done) == 2
    t = s.tasks[0]
    assert todo[0] == f'"{t.name} ({t.duration} min), {t.uid}"'
    assert done[0] == f'"{s.tasks[1].name} ({s.tasks[1].uid})"'


def test_prompt_rejects_empty_pending():
    s = generate_schedule(1)
    state = CycleState(s, BASELINE, s.start_time, ())
    with pytest.raises(ContractViolation):
        assemble_prompt(state)


def test_prompt_deterministic():
    state = CycleState.initial(generate_schedule(9), AGREEABLE)
    assert assemble_prompt(state) == assemble_prompt(state)


# --- parsing -------------------------------------------------------------------

def test_parse_exact_and_lenient():
    s = generate_schedule(1)
    uid = s.tasks[2].uid
    assert parse_agent_reply(uid, s.tasks) == uid
    assert parse_agent_reply(f"The UID is `{uid}`.", s.tasks) == uid
    assert parse_agent_reply(f"```\n{uid.upper()}\n```", s.tasks) == uid
    assert parse_agent_reply(f'  "{uid}"  ', s.tasks) == uid


def test_parse_failures():
    s = generate_schedule(1)
    done, pending = s.tasks[:1], s.tasks[1:]
    assert parse_agent_reply("I'll do the email task", pending) is ReplyFailure.NO_TOKEN
    assert parse_agent_reply("0123456789abcdef", pending) is ReplyFailure.UNKNOWN_UID
    assert parse_agent_reply(done[0].uid, pending, done) is ReplyFailure.COMPLETED_UID
    # a 17-char hex run is not a uid token
    assert parse_agent_reply(pending[0].uid + "a", pending) is ReplyFailure.NO_TOKEN


# --- cycles --------------------------------------------------------------------

def test_identity_cycle():
    s = generate_schedule(1, GenerationParams(min_tasks=5, max_tasks=5))
    state = CycleState.initial(s, BASELINE)
    new, rec = run_decision_cycle(state, FirstPendingAgent())
    assert rec.selected_uid == s.tasks[0].uid and not rec.forced and rec.retries_used == 0
    assert len(new.pending) == 4 and len(new.completed) == 1
    assert new.clock == s.start_time + s.tasks[0].duration


def test_garbage_agent_forces_fallback():
    s = generate_schedule(3)
    state = CycleState.initial(s, BASELINE).apply(s.tasks[0].uid)
    agent = GarbageAgent()
    new, rec = run_decision_cycle(state, agent, RetryPolicy(max_retries=3))
    assert rec.forced and rec.retries_used == 3 and agent.calls == 4
    assert rec.selected_uid == s.tasks[1].uid  # earliest remaining start
    assert rec.failures == ("no-token",) * 4
    assert agent.prompts[0] == rec.prompt
    assert all(p.startswith(rec.prompt) and p != rec.prompt for p in agent.prompts[1:])


def test_clock_wraps_past_midnight():
    from personaseq.schedgen import Schedule, make_task
    a = make_task("Work", 23 * 60 + 50, 20)
    b = make_task("Email", 0 * 60 + 10, 15)
    s = Schedule("late", a.start, (a, b))
    run_state = CycleState.initial(s, BASELINE).apply(a.uid)
    assert format_hhmm(run_state.clock) == "00:10"


def test_run_schedule_identity_and_reverse():
    for seed in range(5):
        s = generate_schedule(seed)
        run = run_schedule(s, BASELINE, FirstPendingAgent())
        assert run.completed_order == run.original_order
        assert len(run.cycles) == len(s)
        rev = run_schedule(s, BASELINE, ReverseAgent())
        assert rev.completed_order == run.original_order[::-1]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**5), picks=st.lists(st.integers(0, 100), min_size=25, max_size=25))
def test_run_invariants(seed, picks):
    s = generate_schedule(seed)

    class Chooser:
        serial = False

        def select(self, prompt, state, i):
            return state.pending[picks[i] % len(state.pending)].uid

    prompts = []
    run = run_schedule(s, BASELINE, Chooser(), on_cycle=lambda r: prompts.append(r.prompt))
    assert sorted(run.completed_order) == sorted(run.original_order)
    assert len(run.cycles) == len(s)
    # prompt monotonicity: to-do shrinks by one, completed grows by one
    for i, p in enumerate(prompts):
        assert len(section(p, "TODO")) == len(s) - i
        assert len(section(p, "COMPLETED")) == i
    # clock consistency is independent of order
    state = CycleState.initial(s, BASELINE)
    for uid in run.completed_order:
        state = state.apply(uid)
    assert state.clock == (s.start_time + s.total_duration) % MINUTES_PER_DAY


def test_abort_carries_checkpoint_and_resume_completes():
    s = generate_schedule(4)
    with pytest.raises(RunAborted) as err:
        run_schedule(s, AGREEABLE, FailingAgent(fail_at=3), EngineConfig(model_id="m"))
    cp = err.value.checkpoint
    assert cp.schedule_id == s.schedule_id and cp.condition == AGREEABLE.label
    assert len(cp.cycles) == 3
    resumed = run_schedule(s, AGREEABLE, FirstPendingAgent(), prior_cycles=cp.cycles)
    assert resumed.completed_order == s.uids


def test_conditions_fixed_per_run():
    s = generate_schedule(6)
    for cond in enumerate_conditions():
        run = run_schedule(s, cond, FirstPendingAgent())
        assert run.condition == cond
        for rec in run.cycles:
            assert rec.prompt.startswith(cond.statement) if cond.statement else \
                rec.prompt.startswith("Current Time:")
