"""Decision-cycle loop: one schedule, one persona condition, one agent."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Protocol

from personaseq.errors import ContractViolation, RunAborted, TransportError
from personaseq.persona import PersonaCondition
from personaseq.schedgen import UID_LENGTH, Schedule
from personaseq.timeofday import advance_clock, format_hhmm

# Bump whenever prompt text changes; it is part of the runner's cache key.
PROMPT_TEMPLATE_VERSION = "1"

TODO_HEADER = "Remaining To-Do List:"
COMPLETED_HEADER = "Completed List:"
INSTRUCTIONS = (
    "Instructions: Consider only the context given above and select the next task to perform "
    "from the Remaining To-Do List. Every task must be completed and none may be skipped. "
    "In your reply, return only the task UID with no additional information."
)
CORRECTIVE_SUFFIX = (
    "Your previous reply did not name a task on the Remaining To-Do List. "
    "Reply with exactly one UID from that list."
)


@dataclass(frozen=True)
class CycleState:
    schedule: Schedule
    condition: PersonaCondition
    clock: int
    pending: tuple
    completed: tuple = ()

    @classmethod
    def initial(cls, schedule: Schedule, condition: PersonaCondition) -> "CycleState":
        return cls(schedule, condition, schedule.start_time, tuple(schedule.tasks))

    @property
    def cycle_index(self) -> int:
        return len(self.completed)

    def pending_uids(self) -> list[str]:
        return [t.uid for t in self.pending]

    def apply(self, uid: str) -> "CycleState":
        """Move ``uid`` from pending to completed and advance the clock."""
        for i, t in enumerate(self.pending):
            if t.uid == uid:
                return replace(
                    self,
                    clock=advance_clock(self.clock, t.duration),
                    pending=self.pending[:i] + self.pending[i + 1:],
                    completed=self.completed + (t,),
                )
        raise ContractViolation(f"uid {uid} is not pending")


@dataclass(frozen=True)
class DecisionCycleRecord:
    cycle_index: int
    prompt: str
    raw_reply: str
    selected_uid: str
    forced: bool
    retries_used: int
    clock: str  # clock at the start of the cycle
    failures: tuple = ()  # parse failure per rejected attempt

    def to_dict(self) -> dict:
        return {
            "cycle_index": self.cycle_index,
            "clock": self.clock,
            "prompt": self.prompt,
            "raw_reply": self.raw_reply,
            "selected_uid": self.selected_uid,
            "forced": self.forced,
            "retries_used": self.retries_used,
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionCycleRecord":
        return cls(d["cycle_index"], d["prompt"], d["raw_reply"], d["selected_uid"],
                   d["forced"], d["retries_used"], d["clock"], tuple(d.get("failures", ())))


@dataclass
class RunRecord:
    schedule: Schedule
    condition: PersonaCondition
    model_id: str
    temperature: float
    cycles: list = field(default_factory=list)

    @property
    def schedule_id(self) -> str:
        return self.schedule.schedule_id

    @property
    def original_order(self) -> list[str]:
        return self.schedule.uids

    @property
    def completed_order(self) -> list[str]:
        return [c.selected_uid for c in self.cycles]

    @property
    def forced_count(self) -> int:
        return sum(c.forced for c in self.cycles)


class Agent(Protocol):
    serial: bool

    def select(self, prompt: str, state: CycleState, cycle_index: int) -> str: ...


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    suffix: str = CORRECTIVE_SUFFIX

    def __post_init__(self):
        if self.max_retries < 0:
            raise ContractViolation("max_retries must be non-negative")


@dataclass(frozen=True)
class EngineConfig:
    model_id: str = "scripted"
    temperature: float = 0.0
    retry: RetryPolicy = RetryPolicy()


# --- prompt --------------------------------------------------------------------

def _fenced(label: str, lines: list[str]) -> str:
    return "\n".join([f"```{label}", *lines, "```"])


def assemble_prompt(state: CycleState) -> str:
    if not state.pending:
        raise ContractViolation("cannot prompt with an empty to-do list")
    todo = [json.dumps(f"{t.name} ({t.duration} min), {t.uid}") for t in state.pending]
    done = [json.dumps(f"{t.name} ({t.uid})") for t in state.completed]
    blocks = []
    if state.condition.statement:
        blocks.append(state.condition.statement)
    blocks += [
        f"Current Time: {format_hhmm(state.clock)}",
        TODO_HEADER + "\n" + _fenced("TODO", todo),
        COMPLETED_HEADER + "\n" + _fenced("COMPLETED", done),
        INSTRUCTIONS,
    ]
    return "\n\n".join(blocks)


# --- reply parsing -------------------------------------------------------------

class ReplyFailure(str, Enum):
    NO_TOKEN = "no-token"
    UNKNOWN_UID = "unknown-uid"
    COMPLETED_UID = "completed-uid"


_HEX_TOKEN = re.compile(rf"(?<![0-9A-Fa-f])[0-9A-Fa-f]{{{UID_LENGTH}}}(?![0-9A-Fa-f])")


def parse_agent_reply(raw: str, pending, completed=()) -> str | ReplyFailure:
    """Pending uid named by ``raw``, or the reason it names none."""
    text = raw.strip().strip("`'\" \n\t")
    m = _HEX_TOKEN.search(text)
    if m is None:
        return ReplyFailure.NO_TOKEN
    token = m.group(0).lower()
    if any(t.uid == token for t in pending):
        return token
    if any(t.uid == token for t in completed):
        return ReplyFailure.COMPLETED_UID
    return ReplyFailure.UNKNOWN_UID


# --- cycles --------------------------------------------------------------------

def run_decision_cycle(state: CycleState, agent: Agent,
                       policy: RetryPolicy = RetryPolicy()) -> tuple[CycleState, DecisionCycleRecord]:
    if not state.pending:
        raise ContractViolation("no pending tasks")
    prompt = assemble_prompt(state)
    index = state.cycle_index
    request = prompt
    retries = 0
    failures = []
    while True:
        raw = agent.select(request, state, index)
        picked = parse_agent_reply(raw, state.pending, state.completed)
        if not isinstance(picked, ReplyFailure):
            forced = False
            break
        failures.append(picked.value)
        if retries == policy.max_retries:
            picked = min(state.pending, key=lambda t: t.start).uid
            forced = True
            break
        retries += 1
        request = prompt + "\n\n" + policy.suffix
    record = DecisionCycleRecord(index, prompt, raw, picked, forced, retries,
                                 format_hhmm(state.clock), tuple(failures))
    return state.apply(picked), record


@dataclass(frozen=True)
class Checkpoint:
    schedule_id: str
    condition: str
    model_id: str
    temperature: float
    cycles: tuple


def run_schedule(schedule: Schedule, condition: PersonaCondition, agent: Agent,
                 config: EngineConfig = EngineConfig(), prior_cycles=(),
                 on_cycle: Callable[[DecisionCycleRecord], None] | None = None) -> RunRecord:
    """Run cycles until the to-do list is empty.

    ``prior_cycles`` (from a checkpoint) are re-applied without calling the agent.
    """
    run = RunRecord(schedule, condition, config.model_id, config.temperature)
    state = CycleState.initial(schedule, condition)
    for rec in prior_cycles:
        state = state.apply(rec.selected_uid)
        run.cycles.append(rec)
    while state.pending:
        try:
            state, rec = run_decision_cycle(state, agent, config.retry)
        except TransportError as exc:
            cp = Checkpoint(schedule.schedule_id, condition.label, config.model_id,
                            config.temperature, tuple(run.cycles))
            raise RunAborted(f"{schedule.schedule_id}/{condition.label}: {exc}", cp) from exc
        run.cycles.append(rec)
        if on_cycle is not None:
            on_cycle(rec)
    return run
