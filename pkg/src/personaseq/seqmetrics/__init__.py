"""Sequence-transformation measures between original and completed task orders."""

from personaseq.seqmetrics.metrics import (
    DISTANCE,
    METRIC_ORIENTATION,
    SIMILARITY,
    TEST_METRICS,
    DeltaAggregate,
    MetricVector,
    MovementDelta,
    RawMetrics,
    aggregate_deltas,
    compute_metrics,
    hamming_matches,
    lcp_length,
    lcs_length,
    lcss_length,
    levenshtein,
    movement_deltas,
    normalize_metrics,
    raw_metrics,
    similarity_ratio,
)

__all__ = [
    "DISTANCE",
    "METRIC_ORIENTATION",
    "SIMILARITY",
    "TEST_METRICS",
    "DeltaAggregate",
    "MetricVector",
    "MovementDelta",
    "RawMetrics",
    "aggregate_deltas",
    "compute_metrics",
    "hamming_matches",
    "lcp_length",
    "lcs_length",
    "lcss_length",
    "levenshtein",
    "movement_deltas",
    "normalize_metrics",
    "raw_metrics",
    "similarity_ratio",
]
