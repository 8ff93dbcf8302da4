import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from personaseq.errors import TransportError


class FirstPendingAgent:
    serial = False

    def select(self, prompt, state, cycle_index):
        return state.pending[0].uid


class ReverseAgent:
    serial = False

    def select(self, prompt, state, cycle_index):
        return f"The UID is `{state.pending[-1].uid}`."


class GarbageAgent:
    serial = False

    def __init__(self):
        self.calls = 0
        self.prompts = []

    def select(self, prompt, state, cycle_index):
        self.calls += 1
        self.prompts.append(prompt)
        return "I'll do the email task"


class FailingAgent:
    """Answers like FirstPendingAgent until ``fail_at``, then raises."""

    serial = False

    def __init__(self, fail_at):
        self.fail_at = fail_at

    def select(self, prompt, state, cycle_index):
        if cycle_index >= self.fail_at:
            raise TransportError("connection reset")
        return state.pending[0].uid


@pytest.fixture
def first_agent():
    return FirstPendingAgent()


def pytest_terminal_summary(terminalreporter):
    lines = [value for rep in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", [])
             for key, value in getattr(rep, "user_properties", ()) if key == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
