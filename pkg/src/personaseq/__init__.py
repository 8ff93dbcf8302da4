"""Persona-induced task reordering: schedules, decision cycles, sequence metrics."""

__version__ = "0.1.0"
