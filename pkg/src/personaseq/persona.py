"""OCEAN persona statements and the eleven experimental conditions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

from personaseq.errors import ConfigurationError


class Trait(Enum):
    OPENNESS = "openness"
    CONSCIENTIOUSNESS = "conscientiousness"
    EXTRAVERSION = "extraversion"
    AGREEABLENESS = "agreeableness"
    NEUROTICISM = "neuroticism"

    @property
    def title(self) -> str:
        return self.value.capitalize()


class Direction(Enum):
    FORWARD = "forward"
    REVERSE = "reverse"

    @property
    def polarity(self) -> str:
        return "Positive" if self is Direction.FORWARD else "Negative"

    @property
    def level(self) -> str:
        return "High" if self is Direction.FORWARD else "Low"


@dataclass(frozen=True)
class LexiconEntry:
    adjective: str
    words: tuple


class TraitLexicon:
    """(trait, direction) -> descriptor adjective and characteristic words."""

    def __init__(self, entries: dict):
        self.entries = dict(entries)

    @staticmethod
    def key(trait: Trait, direction: Direction) -> str:
        return f"{trait.value}:{direction.value}"

    @classmethod
    def from_dict(cls, data: dict) -> "TraitLexicon":
        entries = {}
        for key, spec in data.items():
            try:
                t, d = key.split(":")
                entries[(Trait(t), Direction(d))] = LexiconEntry(spec["adjective"], tuple(spec["words"]))
            except (ValueError, KeyError, TypeError):
                raise ConfigurationError(f"bad lexicon entry {key!r}") from None
        return cls(entries)

    @classmethod
    def load(cls, path) -> "TraitLexicon":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    @lru_cache(maxsize=1)
    def default(cls) -> "TraitLexicon":
        text = resources.files("personaseq").joinpath("data/lexicon.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    def missing(self) -> list[str]:
        return [self.key(t, d) for t in Trait for d in Direction if (t, d) not in self.entries]

    def __getitem__(self, item) -> LexiconEntry:
        return self.entries[item]


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


def build_persona_statement(trait: Trait, direction: Direction, lexicon: TraitLexicon | None = None) -> str:
    lexicon = lexicon or TraitLexicon.default()
    entry = lexicon.entries.get((trait, direction))
    if entry is None:
        raise ConfigurationError(f"lexicon has no entry for {TraitLexicon.key(trait, direction)}")
    if not entry.words:
        raise ConfigurationError(f"lexicon entry {TraitLexicon.key(trait, direction)} has no words")
    return (f"Imagine you are {_article(entry.adjective)} {entry.adjective} person, "
            f"characterised by being {', '.join(entry.words)}.")


@dataclass(frozen=True)
class PersonaCondition:
    trait: Trait | None = None
    direction: Direction | None = None
    statement: str = ""

    @property
    def is_baseline(self) -> bool:
        return self.trait is None

    @property
    def label(self) -> str:
        if self.is_baseline:
            return "baseline"
        return f"{self.trait.value}:{self.direction.value}"

    @property
    def display(self) -> str:
        if self.is_baseline:
            return "Baseline"
        return f"{self.trait.title} ({self.direction.level})"


BASELINE = PersonaCondition()


def enumerate_conditions(lexicon: TraitLexicon | None = None) -> list[PersonaCondition]:
    """Baseline first, then OCEAN order with Forward before Reverse."""
    lexicon = lexicon or TraitLexicon.default()
    missing = lexicon.missing()
    if missing:
        raise ConfigurationError(f"lexicon is missing {', '.join(missing)}")
    out = [BASELINE]
    for trait in Trait:
        for direction in Direction:
            out.append(PersonaCondition(trait, direction, build_persona_statement(trait, direction, lexicon)))
    return out


def condition_from_label(label: str, lexicon: TraitLexicon | None = None) -> PersonaCondition:
    if label == "baseline":
        return BASELINE
    try:
        t, d = label.split(":")
        trait, direction = Trait(t), Direction(d)
    except ValueError:
        raise ConfigurationError(f"unknown condition {label!r}") from None
    return PersonaCondition(trait, direction, build_persona_statement(trait, direction, lexicon))
