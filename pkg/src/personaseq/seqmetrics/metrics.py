"""Movement deltas and sequence-transformation measures between two UID orders."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from personaseq.errors import ContractViolation
from personaseq.seqmetrics import kernels

SIMILARITY = "similarity"
DISTANCE = "distance"

# Measures compared against baseline in significance testing.
TEST_METRICS = ("lcss", "lcp", "lev", "sr", "ham")

METRIC_ORIENTATION = {
    "lcss": SIMILARITY,
    "lcp": SIMILARITY,
    "lev": DISTANCE,
    "lcs": SIMILARITY,
    "sr": SIMILARITY,
    "ham": SIMILARITY,
    "sr_dist": DISTANCE,
    "ham_dist": DISTANCE,
}


def encode(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple[np.ndarray, np.ndarray]:
    """Map two sequences onto a shared integer alphabet."""
    codes: dict = {}
    ea = np.fromiter((codes.setdefault(x, len(codes)) for x in a), dtype=np.int64, count=len(a))
    eb = np.fromiter((codes.setdefault(x, len(codes)) for x in b), dtype=np.int64, count=len(b))
    return ea, eb


@dataclass(frozen=True)
class MovementDelta:
    uid: str
    task_name: str
    delta: int


def movement_deltas(original: Sequence[str], completed: Sequence[str],
                    names: dict[str, str] | None = None) -> list[MovementDelta]:
    """Position shift of every uid, ``completed index - original index``.

    Negative means the task was pulled earlier. Output follows ``original`` order.
    """
    pos = {uid: i for i, uid in enumerate(completed)}
    if len(pos) != len(completed) or len(set(original)) != len(original):
        raise ContractViolation("uids must be distinct")
    if len(original) != len(completed) or set(pos) != set(original):
        raise ContractViolation("completed order is not a permutation of the original")
    names = names or {}
    return [MovementDelta(uid, names.get(uid, uid), pos[uid] - i) for i, uid in enumerate(original)]


def lcs_length(a, b) -> int:
    ea, eb = encode(a, b)
    return int(kernels.lcs_kernel(ea, eb))


def lcss_length(a, b) -> int:
    ea, eb = encode(a, b)
    return int(kernels.lcss_kernel(ea, eb))


def lcp_length(a, b) -> int:
    ea, eb = encode(a, b)
    return int(kernels.lcp_kernel(ea, eb))


def levenshtein(a, b) -> int:
    ea, eb = encode(a, b)
    return int(kernels.lev_kernel(ea, eb))


def hamming_matches(a, b) -> int:
    """Count of equal positions. Hamming distance is ``len(a) - matches``."""
    if len(a) != len(b):
        raise ContractViolation(f"hamming needs equal lengths, got {len(a)} and {len(b)}")
    ea, eb = encode(a, b)
    return int(kernels.ham_kernel(ea, eb))


def similarity_ratio(a, b) -> float:
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    return 2.0 * lcs_length(a, b) / total


@dataclass(frozen=True)
class RawMetrics:
    lcss: int
    lcp: int
    lev: int
    lcs: int
    sr: float
    ham: int  # matching positions
    n: int


@dataclass(frozen=True)
class MetricVector:
    raw: RawMetrics
    lcss: float
    lcp: float
    lev: float
    lcs: float
    sr: float
    ham: float

    @property
    def n(self) -> int:
        return self.raw.n

    def normalized(self, metric: str) -> float:
        if metric == "sr_dist":
            return 1.0 - self.sr
        if metric == "ham_dist":
            return 1.0 - self.ham
        return getattr(self, metric)

    def raw_value(self, metric: str) -> float:
        if metric == "sr_dist":
            return 1.0 - self.raw.sr
        if metric == "ham_dist":
            return self.raw.n - self.raw.ham
        return getattr(self.raw, metric)

    def rows(self):
        """``(metric, orientation, raw, normalized)`` for every emitted column."""
        return [(m, METRIC_ORIENTATION[m], self.raw_value(m), self.normalized(m))
                for m in METRIC_ORIENTATION]


def raw_metrics(original: Sequence[str], completed: Sequence[str]) -> RawMetrics:
    if len(original) != len(completed):
        raise ContractViolation("sequences must have equal length")
    ea, eb = encode(original, completed)
    lcss, lcp, lev, lcs, ham = (int(v) for v in kernels.all_kernel(ea, eb))
    n = len(original)
    sr = 2.0 * lcs / (2 * n) if n else 1.0
    return RawMetrics(lcss=lcss, lcp=lcp, lev=lev, lcs=lcs, sr=sr, ham=ham, n=n)


def normalize_metrics(raw: RawMetrics, n: int | None = None) -> MetricVector:
    n = raw.n if n is None else n
    if n < 1:
        raise ContractViolation("cannot normalise metrics of an empty sequence")
    return MetricVector(
        raw=raw,
        lcss=raw.lcss / n,
        lcp=raw.lcp / n,
        lev=raw.lev / n,
        lcs=raw.lcs / n,
        sr=raw.sr,
        ham=raw.ham / n,
    )


def compute_metrics(original: Sequence[str], completed: Sequence[str]) -> MetricVector:
    return normalize_metrics(raw_metrics(original, completed))


@dataclass(frozen=True)
class DeltaAggregate:
    task_name: str
    condition: str
    mean: float
    std: float
    count: int


def aggregate_deltas(runs: Iterable) -> list[DeltaAggregate]:
    """Mean and population std of movement deltas per (task name, condition).

    ``runs`` are RunRecord-like: ``condition.label``, ``original_order``,
    ``completed_order`` and ``schedule.tasks``.
    """
    samples: dict[tuple[str, str], list[int]] = defaultdict(list)
    for run in runs:
        names = {t.uid: t.name for t in run.schedule.tasks}
        for d in movement_deltas(run.original_order, run.completed_order, names):
            samples[(d.task_name, run.condition.label)].append(d.delta)
    out = []
    for (name, cond), values in samples.items():
        arr = np.asarray(values, dtype=float)
        out.append(DeltaAggregate(name, cond, float(arr.mean()), float(arr.std()), arr.size))
    return out
