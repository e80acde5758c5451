"""Report documents: rendering, the built-in reference tables, the
plain-language uncertainty label, and required-LR figure data.

Display rounding lives here and only here; every number in a rendered table
is recomputed from the operation layer, never stored as a constant. LR
values show one decimal below 100 and none above; percentages show integers
unless a table calls for a decimal; NND shows one decimal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from . import bounds, ceiling, metrics

__all__ = [
    "ReportSection",
    "ReportDocument",
    "round_half_up",
    "fmt_lr",
    "fmt_pct",
    "fmt_nnd",
    "reference_table",
    "REFERENCE_TABLE_IDS",
    "render_uncertainty_label",
    "wall_figure_rows",
    "ceiling_report_sections",
    "slope_report_section",
]


def round_half_up(x, ndigits: int = 0) -> float:
    """Round with ties away from zero (what the printed tables use)."""
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def fmt_lr(x) -> str:
    if x >= 100:
        return f"{round_half_up(x):.0f}"
    v = round_half_up(x, 1)
    return f"{v:.0f}" if v == int(v) else f"{v:.1f}"


def fmt_pct(x, decimals: int = 0) -> str:
    return f"{round_half_up(100 * x, decimals):.{decimals}f}%"


def fmt_nnd(x) -> str:
    v = round_half_up(x, 1)
    return f"{v:.0f}" if v == int(v) else f"{v:.1f}"


def _fmt_float(x) -> str:
    return f"{float(x):.10g}"


@dataclass
class ReportSection:
    """One titled table (or text block) plus the raw values behind it."""

    title: str
    headers: tuple[str, ...] = ()
    rows: list[tuple[str, ...]] = field(default_factory=list)
    data: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    text: str | None = None


@dataclass
class ReportDocument:
    """Ordered sections plus provenance; renders plain, delimited or JSON."""

    sections: list[ReportSection] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def render(self, fmt: str = "plain") -> str:
        if fmt == "plain":
            return self.render_plain()
        if fmt == "csv":
            return self.render_delimited()
        if fmt == "json":
            return self.render_structured()
        raise ValueError(f"unknown format {fmt!r}; use plain, csv or json")

    def render_plain(self) -> str:
        out = []
        for sec in self.sections:
            out.append(f"== {sec.title} ==")
            if sec.text is not None:
                out.append(sec.text)
            if sec.headers:
                table = [sec.headers, *sec.rows]
                widths = [max(len(str(r[i])) for r in table) for i in range(len(sec.headers))]
                for i, row in enumerate(table):
                    out.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
                    if i == 0:
                        out.append("  ".join("-" * w for w in widths))
            for note in sec.notes:
                out.append(f"note: {note}")
            out.append("")
        for key, value in self.provenance.items():
            out.append(f"# {key}: {value}")
        return "\n".join(out) + "\n"

    def render_delimited(self, delimiter: str = ",") -> str:
        out = []
        for sec in self.sections:
            out.append(f"# {sec.title}")
            if sec.text is not None:
                for line in sec.text.splitlines():
                    out.append(f"# {line}")
            if sec.headers:
                out.append(delimiter.join(sec.headers))
                for row in sec.rows:
                    out.append(delimiter.join(str(c) for c in row))
            for note in sec.notes:
                out.append(f"# note: {note}")
        for key, value in self.provenance.items():
            out.append(f"# {key}: {value}")
        return "\n".join(out) + "\n"

    def render_structured(self) -> str:
        doc = {
            "sections": [
                {
                    "title": sec.title,
                    **({"text": sec.text} if sec.text is not None else {}),
                    **({"columns": list(sec.headers)} if sec.headers else {}),
                    **({"data": sec.data} if sec.data else {}),
                    **({"notes": sec.notes} if sec.notes else {}),
                }
                for sec in self.sections
            ],
            "provenance": self.provenance,
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# Built-in reference tables. Ids form a stable catalog; every cell is
# recomputed from the operation layer on each call.
# ---------------------------------------------------------------------------

_TABLE1_PIS = (0.10, 0.05, 0.03, 0.02, 0.01)
_TABLE1_ALPHAS = (0.25, 0.50, 0.75, 0.90)


def _table_required_lr() -> ReportSection:
    grid = bounds.required_lr_table(_TABLE1_PIS, _TABLE1_ALPHAS)
    sec = ReportSection(
        title="Required LR for target PPV",
        headers=("base rate", *(fmt_pct(a) + " PPV" for a in _TABLE1_ALPHAS)),
    )
    for pi, row in zip(_TABLE1_PIS, grid):
        sec.rows.append((fmt_pct(pi), *(fmt_lr(v) for v in row)))
        sec.data.append({"base_rate": pi, "required_lr": [float(v) for v in row]})
    return sec


def _table_ceiling() -> ReportSection:
    scenario = ceiling.table2_scenario()
    return _scenario_summary_section(scenario, title="Two-group surveillance ceiling (correlated markers)")


def _scenario_summary_section(scenario: ceiling.ScenarioResult, title: str) -> ReportSection:
    row = scenario.selected
    report = scenario.report
    sec = ReportSection(title=title, headers=("metric", *report.groups))
    metrics_rows = [
        ("False positive rate (q)", [fmt_pct(row.fpr[g], 1) for g in report.groups],
         {"fpr": {g: row.fpr[g] for g in report.groups}}),
        ("Sensitivity (s)", [fmt_pct(row.sensitivity[g], 1) for g in report.groups],
         {"sensitivity": {g: row.sensitivity[g] for g in report.groups}}),
        ("Likelihood ratio (LR)", [fmt_lr(row.lr[g]) for g in report.groups],
         {"lr": {g: row.lr[g] for g in report.groups}}),
        ("PPV", [fmt_pct(row.ppv[g]) for g in report.groups],
         {"ppv": {g: row.ppv[g] for g in report.groups}}),
        ("NND", [fmt_nnd(row.nnd[g]) for g in report.groups],
         {"nnd": {g: row.nnd[g] for g in report.groups}}),
        ("Best achievable LR (sup over m)", [fmt_lr(report.sup_lr[g]) for g in report.groups],
         {"sup_lr": dict(report.sup_lr)}),
    ]
    for label, cells, raw in metrics_rows:
        sec.rows.append((label, *cells))
        sec.data.append({"metric": label, **raw})
    sec.notes.append(
        f"threshold m = {scenario.selected_m} of k = {len(report.rows)} markers "
        f"(sensitivity nearest {fmt_pct(scenario.target_sensitivity, 1)}); "
        f"base rate {fmt_pct(report.base_rate.value)}"
    )
    for note in report.annotations:
        sec.notes.append(note)
    return sec


def _table_projection() -> ReportSection:
    rows = bounds.projection_table(4.3, (0.173, 0.05, 0.03, 0.02))
    sec = ReportSection(
        title="Projected PPV and NND at LR 4.3",
        headers=("base rate", "projected PPV", "NND"),
    )
    for r in rows:
        sec.rows.append((fmt_pct(r.base_rate.value, 1), fmt_pct(r.ppv), fmt_nnd(r.nnd)))
        sec.data.append({"base_rate": r.base_rate.value, "ppv": r.ppv, "nnd": r.nnd})
    return sec


def _table_nnd() -> ReportSection:
    # NND cell derived from the displayed (integer-percent) PPV so the two
    # printed columns agree with each other; raw values keep full precision.
    rows = bounds.projection_table(4.0, (0.05, 0.03, 0.02, 0.01))
    sec = ReportSection(
        title="NND at LR 4 across base rates",
        headers=("base rate", "LR", "PPV", "NND"),
    )
    for r in rows:
        pct = round_half_up(100 * r.ppv)
        nnd_display = 100 / pct
        sec.rows.append((fmt_pct(r.base_rate.value), fmt_lr(r.lr), fmt_pct(r.ppv), f"{round_half_up(nnd_display):.0f}"))
        sec.data.append(
            {"base_rate": r.base_rate.value, "lr": r.lr, "ppv": r.ppv, "nnd": r.nnd,
             "nnd_from_displayed_ppv": nnd_display}
        )
    sec.notes.append("NND column derived from the displayed PPV; raw data carry the unrounded NND")
    return sec


def _table_benchmarks() -> ReportSection:
    sec = ReportSection(
        title="Evidentiary benchmark bands vs achieved PPV",
        headers=("standard", "approximate probability"),
    )
    for band in reversed(bounds.BENCHMARK_BANDS):
        if band.lower_bound == 0:
            continue
        sec.rows.append((band.name, f">{fmt_pct(band.lower_bound)}"))
        sec.data.append({"band": band.name, "lower_bound": band.lower_bound})
    for pi in (0.05, 0.03, 0.02):
        summary = bounds.PrecisionSummary.from_lr(4.0, pi)
        sec.rows.append((f"achieved PPV at base rate {fmt_pct(pi)}, LR 4", fmt_pct(summary.ppv)))
        sec.data.append({"base_rate": pi, "lr": 4.0, "achieved_ppv": summary.ppv})
    return sec


def _table_auc_ppv() -> ReportSection:
    sec = ReportSection(
        title="PPV at fixed ranking performance (AUC 0.70, flag fraction 0.20)",
        headers=("AUC", "base rate", "approximate PPV"),
    )
    for pi in (0.50, 0.10, 0.03):
        summary, point = metrics.binormal_operating_point(0.70, 0.20, pi)
        sec.rows.append(("0.70", fmt_pct(pi), fmt_pct(summary.ppv)))
        sec.data.append(
            {"auc": 0.70, "base_rate": pi, "ppv": summary.ppv,
             "sensitivity": point.sensitivity, "fpr": point.fpr, "lr": summary.lr}
        )
    return sec


_REFERENCE_TABLES = {
    1: _table_required_lr,
    2: _table_ceiling,
    4: _table_projection,
    6: _table_nnd,
    7: _table_benchmarks,
    8: _table_auc_ppv,
}
REFERENCE_TABLE_IDS = tuple(sorted(_REFERENCE_TABLES))


def reference_table(table_id: int) -> ReportSection:
    """Regenerate one built-in reference table from first principles."""
    try:
        builder = _REFERENCE_TABLES[table_id]
    except KeyError:
        raise ValueError(
            f"unknown table id {table_id}; available: {REFERENCE_TABLE_IDS}"
        ) from None
    return builder()


# ---------------------------------------------------------------------------
# Plain-language uncertainty label
# ---------------------------------------------------------------------------


def _truncate1(x: float) -> str:
    tenths = int(x * 10)  # truncate toward zero
    if tenths % 10 == 0:
        return str(tenths // 10)
    return f"{tenths / 10:.1f}"


def render_uncertainty_label(lr, pi) -> str:
    """Plain-language uncertainty block for a flag with the given LR.

    The headline rate, the "1 in N" phrasing and the detain count are all
    derived from the displayed integer-percent PPV so the sentences agree
    with each other: N is that NND rounded to the nearest integer when >= 2
    (one decimal otherwise), and the detain count shows at most one decimal.
    """
    if lr <= 0:
        raise ValueError("likelihood ratio must be positive")
    pi = bounds._as_base_rate(pi)
    ppv = bounds.ppv_from_lr(lr, pi)
    pct = int(round_half_up(100 * ppv))
    if pct >= 1:
        nnd_label = 100.0 / pct
        pct_text = f"{pct}%"
    else:
        nnd_label = bounds.nnd_from_ppv(ppv)
        pct_text = "<1%"
    if nnd_label >= 2:
        one_in = f"{round_half_up(nnd_label):.0f}"
    else:
        one_in = f"{round_half_up(nnd_label, 1)}"
    detain = _truncate1(nnd_label)

    band = bounds.benchmark_compare(ppv)
    if band.name == "below-preponderance":
        comparison = (
            f'This confidence level ({pct_text}) is well below a '
            f'"more likely than not" benchmark (>50%).'
        )
    else:
        comparison = (
            f'This confidence level ({pct_text}) is at or above a '
            f'"more likely than not" benchmark (>50%); band: {band.name}.'
        )
    lines = [
        "STATISTICAL CONTEXT",
        'This "high risk" flag does NOT mean the outcome will occur.',
        f"At the stated performance (LR = {fmt_lr(lr)}, base rate = {fmt_pct(pi.value)}):",
        f"  * The flag is correct approximately 1 in {one_in} times ({pct_text} PPV).",
        f"  * To prevent one outcome, {detain} flagged individuals would be detained.",
        f"  * {comparison}",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Required-LR curve data for plotting
# ---------------------------------------------------------------------------

INSTRUMENT_LR_BAND = (2.0, 6.0)
REFERENCE_AUDIT_POINT = (0.173, 4.3)  # Broward base rate, audited flag LR


def wall_figure_rows(
    alphas=(0.25, 0.50, 0.75),
    pi_min: float = 0.008,
    pi_max: float = 0.25,
    points: int = 50,
):
    """Rows for the required-LR figure: one curve per target PPV over a
    log-spaced base-rate grid, plus annotation rows for the reported
    instrument LR band and the reference audit point.

    Columns: record_type, label, base_rate, lr.
    """
    if not (0 < pi_min < pi_max < 1):
        raise ValueError("need 0 < pi_min < pi_max < 1")
    if points < 2:
        raise ValueError("need at least two grid points")
    import math

    rows = [("record_type", "label", "base_rate", "lr")]
    ratio = math.log(pi_max / pi_min)
    grid = [pi_min * math.exp(ratio * i / (points - 1)) for i in range(points)]
    for alpha in alphas:
        label = f"ppv={fmt_pct(alpha)}"
        for pi, lr in bounds.wall_curve(alpha, grid):
            rows.append(("curve", label, _fmt_float(pi), _fmt_float(lr)))
    rows.append(("band", "instrument-lr-lower", "", _fmt_float(INSTRUMENT_LR_BAND[0])))
    rows.append(("band", "instrument-lr-upper", "", _fmt_float(INSTRUMENT_LR_BAND[1])))
    rows.append(
        ("marker", "compas-broward", _fmt_float(REFERENCE_AUDIT_POINT[0]), _fmt_float(REFERENCE_AUDIT_POINT[1]))
    )
    return rows


# ---------------------------------------------------------------------------
# Simulation report sections
# ---------------------------------------------------------------------------


def ceiling_report_sections(report: ceiling.CeilingReport) -> list[ReportSection]:
    """Full sweep table plus the per-group LR suprema."""
    sweep = ReportSection(
        title="Threshold sweep",
        headers=(
            "m",
            *(f"s[{g}]" for g in report.groups),
            *(f"q[{g}]" for g in report.groups),
            *(f"LR[{g}]" for g in report.groups),
            *(f"PPV[{g}]" for g in report.groups),
            *(f"NND[{g}]" for g in report.groups),
        ),
    )
    for row in report.rows:
        sweep.rows.append(
            (
                str(row.m),
                *(fmt_pct(row.sensitivity[g], 1) for g in report.groups),
                *(fmt_pct(row.fpr[g], 2) for g in report.groups),
                *(fmt_lr(row.lr[g]) for g in report.groups),
                *(fmt_pct(row.ppv[g], 1) for g in report.groups),
                *(fmt_nnd(row.nnd[g]) for g in report.groups),
            )
        )
        sweep.data.append(
            {
                "m": row.m,
                "sensitivity": dict(row.sensitivity),
                "fpr": dict(row.fpr),
                "lr": dict(row.lr),
                "ppv": dict(row.ppv),
                "nnd": dict(row.nnd),
            }
        )
    sup = ReportSection(title="Best achievable LR per group", headers=("group", "sup LR"))
    for g in report.groups:
        sup.rows.append((g, fmt_lr(report.sup_lr[g])))
        sup.data.append({"group": g, "sup_lr": report.sup_lr[g]})
    for note in report.annotations:
        sup.notes.append(note)
    return [sweep, sup]


def slope_report_section(result: ceiling.SlopeConvergence) -> ReportSection:
    sec = ReportSection(
        title="FPR-ratio growth rate vs large-deviation limit",
        headers=("k", "m", "(1/k) log(q_B/q_A)", "limit", "relative deviation"),
    )
    for k, m, slope in result.per_k:
        rel = abs(slope - result.limit) / abs(result.limit) if result.limit else abs(slope)
        sec.rows.append((str(k), str(m), f"{slope:.6f}", f"{result.limit:.6f}", f"{rel:.3%}"))
        sec.data.append({"k": k, "m": m, "slope": slope, "limit": result.limit, "relative_deviation": rel})
    if result.warning:
        sec.notes.append(result.warning)
    return sec
