"""Command-line surface.

Subcommands: bound, tables, audit, simulate, recal-check, label,
figure-data. A flat INI config file with one section per subcommand can
supply any long option; explicit flags win. The seed comes from --seed,
then the PRECISION_WALL_SEED environment variable, then 0.

Exit codes: 0 success, 1 input/parse error, 2 parameter-validation error.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from . import __version__, bounds, calibration, ceiling, metrics, records, report

_FORMATS = ("plain", "csv", "json")


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


class _Options:
    """Effective option lookup: CLI flag, else config-file key, else default."""

    def __init__(self, args: argparse.Namespace, section: dict[str, str]):
        self.args = args
        self.section = section

    def get(self, name: str, default=None, cast=None):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        raw = self.section.get(name)
        if raw is not None:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw) if cast else raw
        return default

    def echo(self, pairs: dict) -> str:
        return " ".join(f"{k}={v}" for k, v in pairs.items() if v is not None)


def _load_config_section(path: str | None, command: str) -> dict[str, str]:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise records.LoadError(f"cannot read config file {path}")
    if command not in parser:
        return {}
    return {k.replace("-", "_"): v for k, v in parser[command].items()}


def _provenance(command: str, seed: int, echo: str, input_digest: str = "-") -> dict:
    return {
        "tool": f"precision-wall {__version__}",
        "command": command,
        "seed": str(seed),
        "input_sha256": input_digest,
        "config": echo,
    }


def _schema_from_options(opt: _Options) -> records.RecordSchema:
    score_column = opt.get("score_column")
    outcome_column = opt.get("outcome_column")
    if not score_column or not outcome_column:
        raise ValueError("--score-column and --outcome-column are required")
    factor_columns = opt.get("factor_columns", cast=str)
    return records.RecordSchema(
        score_column=score_column,
        outcome_column=outcome_column,
        group_column=opt.get("group_column"),
        factor_columns=tuple(
            c.strip() for c in factor_columns.split(",") if c.strip()
        ) if factor_columns else (),
        score_kind=opt.get("score_kind", default="continuous"),
        delimiter=opt.get("delimiter", default=","),
        binarize_factors=bool(opt.get("binarize_factors", default=False, cast=bool)),
    )


def _cutoff_from_options(opt: _Options, schema: records.RecordSchema) -> metrics.CutoffSpec:
    kind = opt.get("cutoff_kind")
    value = opt.get("cutoff", cast=str)
    if kind is None:
        kind = metrics.DECILE_AT_LEAST if schema.score_kind == "decile" else metrics.SCORE_AT_LEAST
    if kind == metrics.EXPLICIT_FLAG_COLUMN:
        if value is None:
            raise ValueError("explicit-flag-column cutoff needs --cutoff COLUMN")
        return metrics.CutoffSpec(kind, value)
    if value is None:
        if schema.score_kind == "decile":
            value = "8"  # conventional "high risk" decile cutoff
        else:
            raise ValueError("--cutoff is required for continuous scores")
    return metrics.CutoffSpec(kind, float(value))


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def _cmd_bound(opt: _Options, seed: int) -> report.ReportDocument:
    alpha = opt.get("ppv", cast=float)
    lr = opt.get("lr", cast=float)
    pi = opt.get("base_rate", cast=float)
    if pi is None:
        raise ValueError("--base-rate is required")
    if (alpha is None) == (lr is None):
        raise ValueError("supply exactly one of --ppv or --lr")
    sec = report.ReportSection(title="Precision bound", headers=("quantity", "value"))
    if alpha is not None:
        need = bounds.required_lr(alpha, pi)
        band = bounds.benchmark_compare(alpha)
        rows = [
            ("target PPV", report.fmt_pct(alpha)),
            ("base rate", report.fmt_pct(pi, 1)),
            ("required LR", report.fmt_lr(need)),
            ("NND at target", report.fmt_nnd(bounds.nnd_from_ppv(alpha))),
            ("benchmark band of target", band.name),
        ]
        sec.data.append(
            {"target_ppv": alpha, "base_rate": pi, "required_lr": float(need),
             "nnd": float(bounds.nnd_from_ppv(alpha)), "band": band.name}
        )
    else:
        summary = bounds.PrecisionSummary.from_lr(lr, pi)
        band = bounds.benchmark_compare(summary.ppv)
        rows = [
            ("LR", report.fmt_lr(lr)),
            ("base rate", report.fmt_pct(pi, 1)),
            ("PPV", report.fmt_pct(summary.ppv)),
            ("NND", report.fmt_nnd(summary.nnd)),
            ("benchmark band", band.name),
        ]
        sec.data.append(
            {"lr": lr, "base_rate": pi, "ppv": summary.ppv, "nnd": summary.nnd, "band": band.name}
        )
    sec.rows.extend(rows)
    echo = opt.echo({"ppv": alpha, "lr": lr, "base_rate": pi})
    return report.ReportDocument(sections=[sec], provenance=_provenance("bound", seed, echo))


def _cmd_tables(opt: _Options, seed: int) -> report.ReportDocument:
    which = opt.get("which", cast=str)
    ids = _parse_ints(which) if which else list(report.REFERENCE_TABLE_IDS)
    sections = [report.reference_table(i) for i in ids]
    echo = opt.echo({"which": ",".join(str(i) for i in ids)})
    return report.ReportDocument(sections=sections, provenance=_provenance("tables", seed, echo))


def _cmd_audit(opt: _Options, seed: int) -> report.ReportDocument:
    path = opt.get("path")
    schema = _schema_from_options(opt)
    expect_digest = opt.get("expect_digest")
    digest = records.verify_digest(path, expect_digest) if expect_digest else records.file_digest(path)
    data = records.load_records(path, schema)
    cutoff = _cutoff_from_options(opt, schema)
    level = opt.get("level", default=0.95, cast=float)
    lr_method = opt.get("lr_method", default="analytic")
    replicates = opt.get("replicates", default=2000, cast=int)
    base_rates = opt.get("base_rates", cast=_parse_floats) or []

    counts = metrics.confusion_at_cutoff(data, cutoff)
    prevalence = counts.n_positive / counts.total
    s_est, q_est = metrics.operating_point_with_ci(counts, level)
    lr_est = metrics.lr_with_ci(counts, level, method=lr_method, replicates=replicates, seed=seed)
    ppv_est = metrics.projected_ppv(lr_est, prevalence)

    overview = report.ReportSection(title="Records", headers=("quantity", "value"))
    overview.rows.extend(
        [
            ("records loaded", str(counts.total)),
            ("observed base rate", report.fmt_pct(prevalence, 1)),
            ("flag rule", f"{cutoff.kind} {cutoff.value}"),
            ("flagged", str(counts.tp + counts.fp)),
        ]
    )
    overview.data.append(
        {"n": counts.total, "base_rate": prevalence,
         "cutoff": {"kind": cutoff.kind, "value": cutoff.value},
         "confusion": {"tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn}}
    )

    def ci(e: metrics.IntervalEstimate, fmt) -> str:
        return f"{fmt(e.point)} ({fmt(e.lower)}, {fmt(e.upper)})"

    perf = report.ReportSection(
        title=f"Flag performance ({report.fmt_pct(level)} CI)", headers=("metric", "estimate")
    )
    pct1 = lambda v: report.fmt_pct(v, 1)
    perf.rows.extend(
        [
            ("sensitivity (s)", ci(s_est, pct1)),
            ("false positive rate (q)", ci(q_est, pct1)),
            ("likelihood ratio (LR)", ci(lr_est, report.fmt_lr)),
            (f"PPV at base rate {report.fmt_pct(prevalence, 1)}", ci(ppv_est, lambda v: report.fmt_pct(v))),
        ]
    )
    for name, est in (("sensitivity", s_est), ("fpr", q_est), ("lr", lr_est), ("ppv", ppv_est)):
        perf.data.append(
            {"metric": name, "point": est.point, "lower": est.lower, "upper": est.upper,
             "level": est.level, "method": est.method}
        )
    sections = [overview, perf]

    if base_rates:
        proj = report.ReportSection(
            title=f"Projected PPV and NND (LR {report.fmt_lr(lr_est.point)})",
            headers=("base rate", "projected PPV", "NND"),
        )
        for pi in base_rates:
            est = metrics.projected_ppv(lr_est, pi)
            nnd = bounds.nnd_from_ppv(est.point)
            proj.rows.append(
                (report.fmt_pct(pi, 1),
                 f"{report.fmt_pct(est.point)} ({report.fmt_pct(est.lower)}, {report.fmt_pct(est.upper)})",
                 report.fmt_nnd(nnd))
            )
            proj.data.append(
                {"base_rate": pi, "ppv": est.point, "ppv_lower": est.lower,
                 "ppv_upper": est.upper, "nnd": nnd}
            )
        sections.append(proj)

    if schema.group_column and schema.factor_columns:
        amp = metrics.group_amplification(
            data, cutoff, schema.factor_columns, reference_group=opt.get("reference_group")
        )
        gsec = report.ReportSection(
            title="Group FPR amplification",
            headers=("group", "n", "mean risk factors", "FPR", "factor ratio", "FPR ratio"),
        )
        for row in amp.rows:
            gsec.rows.append(
                (row.group, str(row.n), f"{row.mean_factors:.2f}", report.fmt_pct(row.fpr, 1),
                 f"{row.factor_ratio:.1f}x", f"{row.fpr_ratio:.1f}x")
            )
            gsec.data.append(
                {"group": row.group, "n": row.n, "mean_factors": row.mean_factors,
                 "fpr": row.fpr, "factor_ratio": row.factor_ratio,
                 "fpr_ratio": row.fpr_ratio, "superlinear": row.superlinear}
            )
        if amp.any_superlinear:
            gsec.notes.append(
                "superlinear amplification: FPR ratio exceeds mean-factor ratio "
                f"(reference group {amp.reference_group})"
            )
        sections.append(gsec)

    echo = opt.echo(
        {"path": path, "score_column": schema.score_column, "outcome_column": schema.outcome_column,
         "cutoff": f"{cutoff.kind}:{cutoff.value}", "level": level, "lr_method": lr_method,
         "base_rates": ",".join(str(b) for b in base_rates)}
    )
    return report.ReportDocument(sections=sections, provenance=_provenance("audit", seed, echo, digest))


def _cmd_simulate(opt: _Options, seed: int) -> report.ReportDocument:
    scenario = opt.get("scenario")
    if scenario is None:
        raise ValueError("--scenario is required (table2, variant or ldp)")
    echo_pairs = {"scenario": scenario}
    if scenario in ("table2", "variant"):
        overrides = {}
        for key, cast in (
            ("k", int), ("rho", float), ("p_pos_a", float), ("p_neg_a", float),
            ("p_neg_b", float), ("target_sensitivity", float), ("m", int),
        ):
            val = opt.get(key, cast=cast)
            if val is not None:
                overrides[key] = val
        pi = opt.get("base_rate", cast=float)
        if pi is not None:
            overrides["pi"] = pi
        p_pos_b = opt.get("p_pos_b", cast=float)
        echo_pairs.update(overrides)
        if scenario == "table2":
            if p_pos_b is not None:
                overrides["p_pos_b"] = p_pos_b
                echo_pairs["p_pos_b"] = p_pos_b
            result = ceiling.table2_scenario(**overrides)
            sections = [
                report._scenario_summary_section(
                    result, title="Two-group surveillance ceiling (correlated markers)"
                ),
                *report.ceiling_report_sections(result.report),
            ]
        else:
            overrides.pop("m", None)
            kwargs = {"p_pos_b": p_pos_b} if p_pos_b is not None else {}
            comparison = ceiling.variant_scenario(**kwargs, **overrides)
            b, v = comparison.baseline, comparison.variant
            sections = [
                report._scenario_summary_section(b, title="Baseline scenario"),
                report._scenario_summary_section(v, title="Positive-class-shift variant"),
            ]
            gaps = report.ReportSection(
                title="Gap attenuation", headers=("quantity", "baseline", "variant")
            )
            gaps.rows.extend(
                [
                    ("LR gap (A/B)", f"{b.lr_gap:.1f}x", f"{v.lr_gap:.1f}x"),
                    ("PPV gap (A/B)", f"{b.ppv_gap:.1f}x", f"{v.ppv_gap:.1f}x"),
                    ("ceiling direction preserved", "-", "yes" if comparison.direction_preserved else "NO"),
                ]
            )
            gaps.data.append(
                {"lr_gap_baseline": b.lr_gap, "lr_gap_variant": v.lr_gap,
                 "ppv_gap_baseline": b.ppv_gap, "ppv_gap_variant": v.ppv_gap,
                 "direction_preserved": comparison.direction_preserved}
            )
            sections.append(gaps)
    elif scenario == "ldp":
        p_a = opt.get("pa", default=0.15, cast=float)
        p_b = opt.get("pb", default=0.35, cast=float)
        theta = opt.get("theta", default=0.5, cast=float)
        k_list = opt.get("k_list", default=[50, 100, 200, 400], cast=_parse_ints)
        result = ceiling.fpr_ratio_slope(p_a, p_b, theta, k_list)
        sections = [report.slope_report_section(result)]
        echo_pairs.update({"pa": p_a, "pb": p_b, "theta": theta,
                           "k_list": ",".join(str(k) for k in k_list)})
    else:
        raise ValueError(f"unknown scenario {scenario!r}; use table2, variant or ldp")
    return report.ReportDocument(
        sections=sections, provenance=_provenance("simulate", seed, opt.echo(echo_pairs))
    )


def _cmd_recal_check(opt: _Options, seed: int) -> report.ReportDocument:
    path = opt.get("path")
    schema = _schema_from_options(opt)
    data = records.load_records(path, schema)
    method = opt.get("method")
    if method not in ("platt", "isotonic", "expr"):
        raise ValueError("--method must be platt, isotonic or expr")
    scores = [r.score for r in data]
    outcomes = [r.outcome for r in data]

    fit_section = report.ReportSection(title=f"Recalibration fit ({method})", headers=("field", "value"))
    flat_sections = []
    if method == "platt":
        fit = calibration.fit_platt(scores, outcomes)
        transform = fit.as_transform()
        fit_section.rows.extend(
            [
                ("slope", f"{fit.slope_:.6g}"),
                ("intercept", f"{fit.intercept_:.6g}"),
                ("converged", str(fit.converged_)),
                ("separated classes", str(fit.separated_)),
            ]
        )
        fit_section.data.append(
            {"slope": fit.slope_, "intercept": fit.intercept_,
             "converged": fit.converged_, "separated": fit.separated_}
        )
    elif method == "isotonic":
        fit = calibration.fit_isotonic(scores, outcomes)
        transform = fit.as_transform()
        fit_section.rows.extend(
            [
                ("breakpoints", str(len(fit.breakpoints_))),
                ("constant fit", str(fit.constant_)),
            ]
        )
        fit_section.data.append(
            {"breakpoints": [float(b) for b in fit.breakpoints_],
             "levels": [float(v) for v in fit.levels_], "constant": fit.constant_}
        )
        flat = calibration.flat_region_report(fit)
        fsec = report.ReportSection(
            title="Flat regions (invariance not guaranteed)", headers=("from score", "to score")
        )
        for lo, hi in flat:
            fsec.rows.append((f"{lo:g}", f"{hi:g}"))
            fsec.data.append({"lo": lo, "hi": hi})
        if not flat:
            fsec.notes.append("none: fitted levels are strictly increasing")
        flat_sections.append(fsec)
    else:
        expression = opt.get("expr")
        if not expression:
            raise ValueError("--expr is required with --method expr")
        transform = calibration.ExpressionTransform(expression)
        fit_section.rows.append(("expression", expression))
        fit_section.data.append({"expression": expression})

    cutoffs = sorted(set(scores))
    rows = calibration.lr_invariance_check(data, transform, cutoffs)
    mismatches = [r for r in rows if not r.counts_match]
    inv = report.ReportSection(title="Threshold invariance", headers=("quantity", "value"))
    inv.rows.extend(
        [
            ("cutoffs checked", str(len(rows))),
            ("count mismatches", str(len(mismatches))),
        ]
    )
    inv.data.append({"cutoffs_checked": len(rows), "mismatches": len(mismatches)})
    sections = [fit_section, inv]
    if mismatches:
        det = report.ReportSection(
            title="Mismatched cutoffs",
            headers=("cutoff", "before tp/fp/tn/fn", "after tp/fp/tn/fn", "flat region"),
        )
        for r in mismatches:
            b, a = r.before, r.after
            region = f"[{r.flat_region[0]:g}, {r.flat_region[1]:g}]" if r.flat_region else "-"
            det.rows.append(
                (f"{r.cutoff:g}", f"{b.tp}/{b.fp}/{b.tn}/{b.fn}", f"{a.tp}/{a.fp}/{a.tn}/{a.fn}", region)
            )
            det.data.append(
                {"cutoff": r.cutoff,
                 "before": {"tp": b.tp, "fp": b.fp, "tn": b.tn, "fn": b.fn},
                 "after": {"tp": a.tp, "fp": a.fp, "tn": a.tn, "fn": a.fn},
                 "flat_region": list(r.flat_region) if r.flat_region else None}
            )
        sections.append(det)
    sections.extend(flat_sections)
    echo = opt.echo({"path": path, "method": method})
    return report.ReportDocument(
        sections=sections,
        provenance=_provenance("recal-check", seed, echo, records.file_digest(path)),
    )


def _cmd_label(opt: _Options, seed: int) -> report.ReportDocument:
    preset = opt.get("preset")
    lr = opt.get("lr", cast=float)
    pi = opt.get("base_rate", cast=float)
    if preset is not None:
        if preset != "typical":
            raise ValueError(f"unknown preset {preset!r}; available: typical")
        # documented illustrative preset: LR 4 at a 3% base rate
        lr = 4.0 if lr is None else lr
        pi = 0.03 if pi is None else pi
    if lr is None or pi is None:
        raise ValueError("supply --lr and --base-rate, or --preset typical")
    text = report.render_uncertainty_label(lr, pi)
    sec = report.ReportSection(title="Uncertainty label", text=text)
    sec.data.append({"lr": lr, "base_rate": pi})
    echo = opt.echo({"lr": lr, "base_rate": pi})
    return report.ReportDocument(sections=[sec], provenance=_provenance("label", seed, echo))


def _cmd_figure_data(opt: _Options, seed: int) -> report.ReportDocument:
    alphas = opt.get("ppv_targets", default=[0.25, 0.50, 0.75], cast=_parse_floats)
    pi_min = opt.get("pi_min", default=0.008, cast=float)
    pi_max = opt.get("pi_max", default=0.25, cast=float)
    points = opt.get("points", default=50, cast=int)
    rows = report.wall_figure_rows(alphas, pi_min, pi_max, points)
    sec = report.ReportSection(title="Required-LR curve data", headers=rows[0])
    for r in rows[1:]:
        sec.rows.append(r)
        sec.data.append(dict(zip(rows[0], r)))
    echo = opt.echo(
        {"ppv_targets": ",".join(str(a) for a in alphas), "pi_min": pi_min,
         "pi_max": pi_max, "points": points}
    )
    return report.ReportDocument(sections=[sec], provenance=_provenance("figure-data", seed, echo))


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def _add_schema_flags(p: argparse.ArgumentParser):
    p.add_argument("--score-column", dest="score_column")
    p.add_argument("--outcome-column", dest="outcome_column")
    p.add_argument("--group-column", dest="group_column")
    p.add_argument("--factor-columns", dest="factor_columns", help="comma-separated column names")
    p.add_argument("--score-kind", dest="score_kind", choices=("continuous", "decile"))
    p.add_argument("--delimiter", dest="delimiter")
    p.add_argument("--binarize-factors", dest="binarize_factors", action="store_const", const=True)


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--format", dest="format", choices=_FORMATS)
    p.add_argument("--out", dest="out")
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--config", dest="config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precision-wall",
        description="Structural precision limits for rare-event binary flags",
    )
    parser.add_argument("--version", action="version", version=f"precision-wall {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="required LR for a target PPV, or PPV/NND at a given LR")
    p.add_argument("--ppv", type=float, help="target PPV in (0,1)")
    p.add_argument("--lr", type=float, help="achieved likelihood ratio")
    p.add_argument("--base-rate", dest="base_rate", type=float)
    _add_common_flags(p)

    p = sub.add_parser("tables", help="regenerate the built-in reference tables")
    p.add_argument(
        "--which",
        help="comma-separated table ids (1 required-LR grid, 2 surveillance ceiling, "
        "4 PPV/NND projection, 6 NND at LR 4, 7 benchmark bands, 8 AUC-to-PPV); default all",
    )
    _add_common_flags(p)

    p = sub.add_parser("audit", help="audit a score/outcome file against the bounds")
    p.add_argument("path")
    _add_schema_flags(p)
    p.add_argument("--cutoff", help="flag threshold (or column name for explicit-flag-column)")
    p.add_argument(
        "--cutoff-kind", dest="cutoff_kind",
        choices=(metrics.SCORE_AT_LEAST, metrics.DECILE_AT_LEAST, metrics.EXPLICIT_FLAG_COLUMN),
    )
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--lr-method", dest="lr_method", choices=("analytic", "bootstrap"))
    p.add_argument("--replicates", type=int, help="bootstrap replicates (default 2000)")
    p.add_argument("--base-rates", dest="base_rates", type=_parse_floats,
                   help="comma-separated override base rates for projections")
    p.add_argument("--reference-group", dest="reference_group")
    p.add_argument("--expect-digest", dest="expect_digest", help="required SHA-256 of the input file")
    _add_common_flags(p)

    p = sub.add_parser("simulate", help="run a surveillance-ceiling scenario")
    p.add_argument("--scenario", choices=("table2", "variant", "ldp"))
    p.add_argument("--k", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--p-pos-a", dest="p_pos_a", type=float)
    p.add_argument("--p-pos-b", dest="p_pos_b", type=float)
    p.add_argument("--p-neg-a", dest="p_neg_a", type=float)
    p.add_argument("--p-neg-b", dest="p_neg_b", type=float)
    p.add_argument("--base-rate", dest="base_rate", type=float)
    p.add_argument("--target-sensitivity", dest="target_sensitivity", type=float)
    p.add_argument("--m", type=int, help="pin the threshold instead of deriving it")
    p.add_argument("--pa", type=float, help="ldp: group-A negative-class prevalence")
    p.add_argument("--pb", type=float, help="ldp: group-B negative-class prevalence")
    p.add_argument("--theta", type=float, help="ldp: threshold fraction")
    p.add_argument("--k-list", dest="k_list", type=_parse_ints, help="ldp: ascending k values")
    _add_common_flags(p)

    p = sub.add_parser("recal-check", help="verify LR invariance under a recalibration method")
    p.add_argument("path")
    _add_schema_flags(p)
    p.add_argument("--method", choices=("platt", "isotonic", "expr"))
    p.add_argument("--expr", help="strictly increasing expression in x, e.g. '2*x+1'")
    _add_common_flags(p)

    p = sub.add_parser("label", help="plain-language uncertainty label for a flag")
    p.add_argument("--lr", type=float)
    p.add_argument("--base-rate", dest="base_rate", type=float)
    p.add_argument("--preset", help="named parameter preset: typical (LR 4, base rate 3%%)")
    _add_common_flags(p)

    p = sub.add_parser("figure-data", help="emit required-LR curve points for plotting")
    p.add_argument("--ppv-targets", dest="ppv_targets", type=_parse_floats)
    p.add_argument("--pi-min", dest="pi_min", type=float)
    p.add_argument("--pi-max", dest="pi_max", type=float)
    p.add_argument("--points", type=int)
    _add_common_flags(p)

    return parser


_COMMANDS = {
    "bound": _cmd_bound,
    "tables": _cmd_tables,
    "audit": _cmd_audit,
    "simulate": _cmd_simulate,
    "recal-check": _cmd_recal_check,
    "label": _cmd_label,
    "figure-data": _cmd_figure_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        section = _load_config_section(getattr(args, "config", None), args.command)
        opt = _Options(args, section)
        seed = opt.get("seed", cast=int)
        if seed is None:
            seed = int(os.environ.get("PRECISION_WALL_SEED", "0"))
        document = _COMMANDS[args.command](opt, seed)
        fmt = opt.get("format", default="csv" if args.command == "figure-data" else "plain")
        rendered = document.render(fmt)
        out = opt.get("out")
        if out:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(rendered)
        else:
            sys.stdout.write(rendered)
    except records.LoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
