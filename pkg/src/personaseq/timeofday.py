"""Minute-resolution wall-clock times, stored as minutes since midnight."""

import re

from personaseq.errors import ContractViolation, InvalidInputError

MINUTES_PER_DAY = 24 * 60

_HHMM = re.compile(r"^([01]\d|2[0-3]):([0-5]\d)$")


def parse_hhmm(text: str) -> int:
    m = _HHMM.match(text)
    if not m:
        raise InvalidInputError(f"not a 24-hour HH:MM time: {text!r}")
    return int(m.group(1)) * 60 + int(m.group(2))


def format_hhmm(minutes: int) -> str:
    if not 0 <= minutes < MINUTES_PER_DAY:
        raise InvalidInputError(f"time of day out of range: {minutes}")
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def advance_clock(clock: int, duration: int) -> int:
    """``clock + duration`` wrapped past midnight."""
    if duration < 1:
        raise ContractViolation(f"duration must be at least 1 minute, got {duration}")
    return (clock + duration) % MINUTES_PER_DAY
