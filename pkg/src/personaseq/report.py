"""Tables, movement-delta charts, significance tables and SVG figures.

Everything here is a pure function of its inputs; the runner decides where
the text ends up.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from personaseq.errors import ConfigurationError
from personaseq.persona import condition_from_label, enumerate_conditions
from personaseq.schedgen import CATEGORY_TAGS, TaskCatalog, default_catalog
from personaseq.seqmetrics import TEST_METRICS, DeltaAggregate, aggregate_deltas, compute_metrics
from personaseq.stats import SampleSummary, StatResult, bonferroni_threshold, summarize, welch_t_test

log = logging.getLogger(__name__)

TABLE_METRICS = TEST_METRICS
CONDITION_ORDER = [c.label for c in enumerate_conditions()]
# tags whose tasks a trait's chart highlights
TRAIT_HIGHLIGHT = {"conscientiousness": "work", "extraversion": "social"}


def _condition_rank(label: str) -> tuple:
    return (CONDITION_ORDER.index(label), label) if label in CONDITION_ORDER else (len(CONDITION_ORDER), label)


def display_name(label: str) -> str:
    try:
        return condition_from_label(label).display
    except ConfigurationError:
        return label


# --- per-run metric records ----------------------------------------------------

@dataclass(frozen=True)
class MetricRecord:
    """Normalized metrics of one matrix cell."""

    schedule_id: str
    condition: str
    model_id: str
    temperature: float
    values: dict = field(compare=False)  # metric -> normalized value
    raw: dict = field(default_factory=dict, compare=False)  # metric -> raw value


def metric_record(run) -> MetricRecord:
    rows = compute_metrics(run.original_order, run.completed_order).rows()
    return MetricRecord(run.schedule_id, run.condition.label, run.model_id, float(run.temperature),
                        {m: norm for m, _, _, norm in rows}, {m: raw for m, _, raw, _ in rows})


def _select(records, model_id: str, temperature: float, condition: str | None = None):
    return [r for r in records
            if r.model_id == model_id and abs(r.temperature - temperature) < 1e-9
            and (condition is None or r.condition == condition)]


# --- tables --------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionTableRow:
    label: str
    display: str
    n: int
    cells: dict  # metric -> SampleSummary


def _row(label: str, display: str, recs, metrics) -> ConditionTableRow:
    cells = {m: summarize([r.values[m] for r in recs]) for m in metrics}
    return ConditionTableRow(label, display, len(recs), cells)


def build_condition_table(records, model_id: str, temperature: float,
                          metrics=TABLE_METRICS) -> list[ConditionTableRow]:
    """One row per condition present at (model, temperature), in canonical order."""
    chosen = _select(records, model_id, temperature)
    if not chosen:
        log.warning("no runs for model %s at temperature %s", model_id, temperature)
        return []
    groups: dict[str, list] = {}
    for r in chosen:
        groups.setdefault(r.condition, []).append(r)
    return [_row(label, display_name(label), groups[label], metrics)
            for label in sorted(groups, key=_condition_rank)]


def build_temperature_table(records, model_id: str, condition: str = "baseline",
                            metrics=TABLE_METRICS) -> list[ConditionTableRow]:
    """One row per temperature for a single condition, ascending."""
    temps = sorted({r.temperature for r in records if r.model_id == model_id and r.condition == condition})
    return [_row(f"{t:.1f}", f"τ = {t:.1f}", _select(records, model_id, t, condition), metrics)
            for t in temps]


def _cell(s: SampleSummary) -> str:
    return f"({s.mean:.3f} / {s.std:.3f})"


def table_to_csv(rows: list[ConditionTableRow], metrics=TABLE_METRICS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "n"] + [f"{m}_{s}" for m in metrics for s in ("mean", "std")])
    for row in rows:
        w.writerow([row.label, row.n] + [repr(v) for m in metrics
                                         for v in (row.cells[m].mean, row.cells[m].std)])
    return buf.getvalue()


def _aligned(header: list[str], body: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    return "\n".join([fmt(header), fmt(["-" * w for w in widths]), *map(fmt, body)]) + "\n"


def table_to_text(rows: list[ConditionTableRow], metrics=TABLE_METRICS, title: str = "") -> str:
    header = ["Condition", "n"] + [m.upper() for m in metrics]
    body = [[r.display, str(r.n)] + [_cell(r.cells[m]) for m in metrics] for r in rows]
    text = _aligned(header, body)
    return f"{title}\n{text}" if title else text


# --- significance --------------------------------------------------------------

def significance_table(records, model_id: str, temperature: float, alpha: float = 0.05,
                       m: int = 50, metrics=TEST_METRICS) -> list[StatResult]:
    """Welch's test of every non-baseline condition against baseline, per metric."""
    threshold = bonferroni_threshold(alpha, m)
    chosen = _select(records, model_id, temperature)
    base = [r for r in chosen if r.condition == "baseline"]
    if len(base) < 2:
        log.warning("need at least two baseline runs for model %s at %s", model_id, temperature)
        return []
    out = []
    labels = sorted({r.condition for r in chosen} - {"baseline"}, key=_condition_rank)
    for label in labels:
        recs = [r for r in chosen if r.condition == label]
        if len(recs) < 2:
            log.warning("skipping %s: fewer than two runs", label)
            continue
        trait, direction = label.split(":")
        for metric in metrics:
            out.append(welch_t_test([r.values[metric] for r in recs],
                                    [r.values[metric] for r in base],
                                    threshold=threshold, label=(trait, direction, metric)))
    return out


def significance_to_csv(results: list[StatResult], model_id: str | None = None,
                        temperature: float | None = None) -> str:
    """Insignificant rows carry an asterisk in the ``significant`` column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    lead = ["model_id", "temperature"] if model_id is not None else []
    w.writerow(lead + ["trait", "direction", "metric", "t", "df", "p", "threshold", "significant"])
    for r in results:
        prefix = [model_id, temperature] if model_id is not None else []
        w.writerow(prefix + [*r.label, repr(r.t), repr(r.df), repr(r.p), repr(r.threshold),
                             "yes" if r.significant else "no*"])
    return buf.getvalue()


def significance_to_text(results: list[StatResult], metrics=TEST_METRICS) -> str:
    """p-values by condition and metric; non-significant values get an asterisk."""
    by_cond: dict[tuple, dict] = {}
    for r in results:
        by_cond.setdefault(r.label[:2], {})[r.label[2]] = r
    header = ["Condition"] + [m.upper() for m in metrics]
    body = []
    for (trait, direction), cells in by_cond.items():
        row = [display_name(f"{trait}:{direction}")]
        for m in metrics:
            r = cells.get(m)
            row.append("" if r is None else f"{r.p:.3g}" + ("" if r.significant else "*"))
        body.append(row)
    return _aligned(header, body)


# --- delta charts --------------------------------------------------------------

@dataclass(frozen=True)
class DeltaChartSeries:
    condition: str
    task_names: tuple
    means: tuple
    stds: tuple
    counts: tuple
    highlight: frozenset  # task names drawn in the highlight colour
    tag: str | None = None


def delta_chart_from_aggregates(aggregates: list[DeltaAggregate], condition: str,
                                highlight: str | None = None,
                                catalog: TaskCatalog | None = None) -> DeltaChartSeries:
    catalog = catalog or default_catalog()
    if highlight is not None and highlight not in CATEGORY_TAGS:
        raise ConfigurationError(f"unknown highlight tag {highlight!r}; expected one of {CATEGORY_TAGS}")
    by_name = {a.task_name: a for a in aggregates if a.condition == condition}
    if not by_name:
        raise ConfigurationError(f"no movement deltas for condition {condition!r}")
    # catalog order first, then any imported names the catalog lacks
    names = [n for n in catalog.names if n in by_name] + sorted(set(by_name) - set(catalog.names))
    marked = frozenset(catalog.names_with(highlight)) & set(names) if highlight else frozenset()
    return DeltaChartSeries(
        condition=condition,
        task_names=tuple(names),
        means=tuple(by_name[n].mean for n in names),
        stds=tuple(by_name[n].std for n in names),
        counts=tuple(by_name[n].count for n in names),
        highlight=marked,
        tag=highlight,
    )


def build_delta_chart(runs, condition: str, highlight: str | None = None,
                      catalog: TaskCatalog | None = None) -> DeltaChartSeries:
    chosen = [r for r in runs if r.condition.label == condition]
    if not chosen:
        raise ConfigurationError(f"no runs for condition {condition!r}")
    return delta_chart_from_aggregates(aggregate_deltas(chosen), condition, highlight, catalog)


def default_highlight(condition: str) -> str | None:
    return TRAIT_HIGHLIGHT.get(condition.split(":")[0])


# --- SVG -----------------------------------------------------------------------

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79")


@dataclass(frozen=True)
class SvgStyle:
    width: int = 760
    height: int = 440
    margin_left: int = 60
    margin_right: int = 20
    margin_top: int = 36
    margin_bottom: int = 120
    font_family: str = "Helvetica, Arial, sans-serif"
    font_size: int = 11
    highlight_color: str = "#f2c230"  # yellow
    base_color: str = "#4a78c2"  # blue
    error_color: str = "#222222"
    axis_color: str = "#444444"
    y_range: tuple = (-15.0, 15.0)
    palette: tuple = PALETTE
    legend_width: int = 170


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _doc(style: SvgStyle, width: int, body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{style.height}" '
            f'viewBox="0 0 {width} {style.height}" font-family="{escape(style.font_family)}" '
            f'font-size="{style.font_size}">')
    parts = [head, f"<title>{escape(title)}</title>",
             f'<rect class="background" x="0" y="0" width="{width}" height="{style.height}" fill="#ffffff"/>',
             f'<text class="title" x="{_f(width / 2)}" y="20" text-anchor="middle" '
             f'font-size="{style.font_size + 3}">{escape(title)}</text>',
             *body, "</svg>"]
    return "\n".join(parts) + "\n"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    raw = (hi - lo) / target
    mag = 10 ** np.floor(np.log10(raw))
    step = min((k * mag for k in (1, 2, 2.5, 5, 10) if k * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def delta_axis_range(series: DeltaChartSeries, style: SvgStyle | None = None) -> tuple[float, float]:
    """Default y range, widened to whole units when a mean ± σ falls outside it."""
    lo, hi = (style or SvgStyle()).y_range
    low = min(m - s for m, s in zip(series.means, series.stds))
    high = max(m + s for m, s in zip(series.means, series.stds))
    return float(min(lo, np.floor(low))), float(max(hi, np.ceil(high)))


def delta_chart_svg(series: DeltaChartSeries, style: SvgStyle | None = None) -> str:
    style = style or SvgStyle()
    n = len(series.task_names)
    if n == 0:
        raise ConfigurationError("empty delta series")
    lo, hi = delta_axis_range(series, style)
    x0, x1 = style.margin_left, style.width - style.margin_right
    y0, y1 = style.margin_top, style.height - style.margin_bottom
    ys = lambda v: y1 - (v - lo) / (hi - lo) * (y1 - y0)  # noqa: E731
    slot = (x1 - x0) / n
    bar_w = slot * 0.7

    body = [f'<g class="axes" stroke="{style.axis_color}" stroke-width="1">',
            f'<line x1="{x0}" y1="{_f(y0)}" x2="{x0}" y2="{_f(y1)}"/>',
            f'<line x1="{x0}" y1="{_f(ys(0))}" x2="{x1}" y2="{_f(ys(0))}"/>', "</g>"]
    for tick in _nice_ticks(lo, hi):
        y = _f(ys(tick))
        body.append(f'<line class="tick" x1="{x0 - 4}" y1="{y}" x2="{x0}" y2="{y}" stroke="{style.axis_color}"/>')
        body.append(f'<text class="tick-label" x="{x0 - 6}" y="{y}" text-anchor="end" '
                    f'dominant-baseline="middle">{tick:g}</text>')
    body.append(f'<text class="axis-label" x="16" y="{_f((y0 + y1) / 2)}" text-anchor="middle" '
                f'transform="rotate(-90 16 {_f((y0 + y1) / 2)})">Movement delta (positions)</text>')
    for i, (name, mu, sd) in enumerate(zip(series.task_names, series.means, series.stds)):
        cx = x0 + slot * (i + 0.5)
        top, bottom = (ys(mu), ys(0)) if mu >= 0 else (ys(0), ys(mu))
        color = style.highlight_color if name in series.highlight else style.base_color
        body.append(f'<rect class="bar" x="{_f(cx - bar_w / 2)}" y="{_f(top)}" width="{_f(bar_w)}" '
                    f'height="{_f(bottom - top)}" fill="{color}"><title>{escape(name)}: '
                    f'{mu:.2f} ± {sd:.2f}</title></rect>')
        ea, eb = _f(ys(mu + sd)), _f(ys(mu - sd))
        cap = bar_w / 4
        body.append(f'<g class="error-bar" stroke="{style.error_color}" stroke-width="1">'
                    f'<line x1="{_f(cx)}" y1="{ea}" x2="{_f(cx)}" y2="{eb}"/>'
                    f'<line x1="{_f(cx - cap)}" y1="{ea}" x2="{_f(cx + cap)}" y2="{ea}"/>'
                    f'<line x1="{_f(cx - cap)}" y1="{eb}" x2="{_f(cx + cap)}" y2="{eb}"/></g>')
        ly = _f(y1 + 8)
        body.append(f'<text class="task-label" x="{_f(cx)}" y="{ly}" text-anchor="end" '
                    f'transform="rotate(-45 {_f(cx)} {ly})">{escape(name)}</text>')
    return _doc(style, style.width, body, f"Movement deltas: {display_name(series.condition)}")


def kde_svg(curves, style: SvgStyle | None = None, title: str = "Kernel density") -> str:
    """One path per labelled curve plus a legend; ``curves`` is [(label, KDECurve), ...]."""
    style = style or SvgStyle()
    curves = list(curves)
    if not curves:
        raise ConfigurationError("no curves to draw")
    width = style.width + style.legend_width
    xs = np.concatenate([c.x for _, c in curves])
    lo, hi = float(xs.min()), float(xs.max())
    top = max(float(c.density.max()) for _, c in curves) * 1.05 or 1.0
    x0, x1 = style.margin_left, style.width - style.margin_right
    y0, y1 = style.margin_top, style.height - 50
    sx = lambda v: x0 + (v - lo) / (hi - lo or 1.0) * (x1 - x0)  # noqa: E731
    sy = lambda v: y1 - v / top * (y1 - y0)  # noqa: E731

    body = [f'<g class="axes" stroke="{style.axis_color}" stroke-width="1">',
            f'<line x1="{x0}" y1="{_f(y1)}" x2="{x1}" y2="{_f(y1)}"/>',
            f'<line x1="{x0}" y1="{_f(y0)}" x2="{x0}" y2="{_f(y1)}"/>', "</g>"]
    for tick in _nice_ticks(lo, hi):
        x = _f(sx(tick))
        body.append(f'<text class="tick-label" x="{x}" y="{_f(y1 + 16)}" text-anchor="middle">{tick:g}</text>')
    for i, (label, c) in enumerate(curves):
        color = style.palette[i % len(style.palette)]
        pts = " L".join(f"{_f(sx(x))},{_f(sy(d))}" for x, d in zip(c.x, c.density))
        body.append(f'<path class="curve" d="M{pts}" fill="none" stroke="{color}" stroke-width="1.5">'
                    f'<title>{escape(display_name(label))}</title></path>')
    lx = style.width + 10
    body.append('<g class="legend">')
    for i, (label, _) in enumerate(curves):
        color = style.palette[i % len(style.palette)]
        y = y0 + 18 * i
        body.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 18}" y2="{y}" stroke="{color}" stroke-width="3"/>')
        body.append(f'<text x="{lx + 24}" y="{y}" dominant-baseline="middle">{escape(display_name(label))}</text>')
    body.append("</g>")
    return _doc(style, width, body, title)


def emit_svg(obj, style: SvgStyle | None = None, **kw) -> str:
    if isinstance(obj, DeltaChartSeries):
        return delta_chart_svg(obj, style)
    return kde_svg(obj, style, **kw)
