"""Operating-point, likelihood-ratio and AUC estimation from labeled records.

Estimators for the quantities the bound algebra consumes: confusion counts
at a cutoff, sensitivity / false-positive-rate with Wilson score intervals,
the likelihood ratio with a log-normal (or bootstrap percentile) interval,
PPV projections across base rates, rank-based AUC, AUC-to-operating-point
conversion under an equal-variance binormal model, and group-stratified
false-positive-rate amplification.

Interval conventions follow standard epidemiological practice: Wilson score
for the two conditional rates, normal approximation on log LR with
SE = sqrt((1-s)/(s*n1) + (1-q)/(q*n0)), and monotone endpoint mapping for
PPV intervals derived from an LR interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm, rankdata

from .bounds import BaseRate, OperatingPoint, PrecisionSummary, _as_base_rate, ppv_from_lr

__all__ = [
    "AuditRecord",
    "ConfusionCounts",
    "IntervalEstimate",
    "CutoffSpec",
    "GroupAmplificationRow",
    "GroupAmplificationReport",
    "confusion_at_cutoff",
    "wilson_interval",
    "operating_point_with_ci",
    "lr_with_ci",
    "projected_ppv",
    "auc_rank_estimate",
    "binormal_operating_point",
    "group_amplification",
]


@dataclass(frozen=True)
class AuditRecord:
    """One individual: score, binary outcome, optional group and binary factors."""

    score: float
    outcome: int
    group: str | None = None
    factors: Mapping[str, int] | None = None

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome!r}")
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score!r}")
        if self.factors is not None:
            for name, v in self.factors.items():
                if v not in (0, 1):
                    raise ValueError(f"factor {name!r} must be 0 or 1, got {v!r}")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def n_positive(self) -> int:
        return self.tp + self.fn

    @property
    def n_negative(self) -> int:
        return self.fp + self.tn

    @property
    def sensitivity(self) -> float:
        if self.n_positive == 0:
            raise ValueError("no positives: sensitivity undefined")
        return self.tp / self.n_positive

    @property
    def fpr(self) -> float:
        if self.n_negative == 0:
            raise ValueError("no negatives: false positive rate undefined")
        return self.fp / self.n_negative

    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(self.sensitivity, self.fpr)


@dataclass(frozen=True)
class IntervalEstimate:
    """Point value with two-sided confidence bounds."""

    point: float
    lower: float
    upper: float
    level: float = 0.95
    method: str = ""

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError(f"confidence level must lie in (0, 1), got {self.level!r}")
        if not self.lower <= self.point <= self.upper:
            raise ValueError(
                f"interval must satisfy lower <= point <= upper, got "
                f"({self.lower!r}, {self.point!r}, {self.upper!r})"
            )


SCORE_AT_LEAST = "score-at-least"
DECILE_AT_LEAST = "decile-at-least"
EXPLICIT_FLAG_COLUMN = "explicit-flag-column"
_CUTOFF_KINDS = (SCORE_AT_LEAST, DECILE_AT_LEAST, EXPLICIT_FLAG_COLUMN)


@dataclass(frozen=True)
class CutoffSpec:
    """How records are flagged: score >= threshold, or an explicit 0/1 column."""

    kind: str
    value: float | str

    def __post_init__(self):
        if self.kind not in _CUTOFF_KINDS:
            raise ValueError(f"cutoff kind must be one of {_CUTOFF_KINDS}, got {self.kind!r}")
        if self.kind == EXPLICIT_FLAG_COLUMN:
            if not isinstance(self.value, str):
                raise ValueError("explicit-flag-column cutoff needs a column name")
        elif not isinstance(self.value, (int, float)) or not math.isfinite(self.value):
            raise ValueError(f"threshold must be a finite number, got {self.value!r}")


def _flag(record: AuditRecord, cutoff: CutoffSpec) -> bool:
    if cutoff.kind == EXPLICIT_FLAG_COLUMN:
        if record.factors is None or cutoff.value not in record.factors:
            raise ValueError(f"record has no flag column {cutoff.value!r}")
        return record.factors[cutoff.value] == 1
    return record.score >= cutoff.value


def confusion_at_cutoff(records: Sequence[AuditRecord], cutoff: CutoffSpec) -> ConfusionCounts:
    """Confusion counts with flag = (score >= threshold), ties included."""
    if not records:
        raise ValueError("no records")
    tp = fp = tn = fn = 0
    for r in records:
        if _flag(r, cutoff):
            if r.outcome == 1:
                tp += 1
            else:
                fp += 1
        elif r.outcome == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> IntervalEstimate:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = norm.ppf(0.5 + level / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return IntervalEstimate(
        point=p,
        lower=max(0.0, min(center - half, p)),
        upper=min(1.0, max(center + half, p)),
        level=level,
        method="wilson",
    )


def operating_point_with_ci(counts: ConfusionCounts, level: float = 0.95):
    """(sensitivity, fpr) as Wilson IntervalEstimates."""
    if counts.n_positive < 1 or counts.n_negative < 1:
        raise ValueError("need at least one positive and one negative")
    s = wilson_interval(counts.tp, counts.n_positive, level)
    q = wilson_interval(counts.fp, counts.n_negative, level)
    return s, q


def lr_with_ci(
    counts: ConfusionCounts,
    level: float = 0.95,
    method: str = "analytic",
    replicates: int = 2000,
    seed: int = 0,
) -> IntervalEstimate:
    """Likelihood ratio s/q with a confidence interval.

    ``analytic`` uses the normal approximation on log LR with
    SE = sqrt((1-s)/(s*n1) + (1-q)/(q*n0)); it needs all four counts >= 1.
    ``bootstrap`` resamples tp and fp binomially from the observed rates and
    takes the percentile interval; replicates that hit an empty cell get a
    0.5 continuity correction. Bootstrap draws come from a single seeded
    generator, so results are bitwise reproducible for a fixed seed.
    """
    n1, n0 = counts.n_positive, counts.n_negative
    if n1 < 1 or n0 < 1:
        raise ValueError("need at least one positive and one negative")
    if method == "analytic":
        if min(counts.tp, counts.fp, counts.tn, counts.fn) < 1:
            raise ValueError("zero cell: analytic LR interval unavailable, use bootstrap")
        s, q = counts.sensitivity, counts.fpr
        point = s / q
        se = math.sqrt((1 - s) / (s * n1) + (1 - q) / (q * n0))
        z = norm.ppf(0.5 + level / 2)
        return IntervalEstimate(
            point=point,
            lower=point * math.exp(-z * se),
            upper=point * math.exp(z * se),
            level=level,
            method="log-normal",
        )
    if method == "bootstrap":
        s_hat = counts.tp / n1
        q_hat = counts.fp / n0
        rng = np.random.default_rng(seed)
        tp_star = rng.binomial(n1, s_hat, size=replicates).astype(float)
        fp_star = rng.binomial(n0, q_hat, size=replicates).astype(float)
        np.maximum(tp_star, 0.5, out=tp_star)
        np.maximum(fp_star, 0.5, out=fp_star)
        lr_star = (tp_star / n1) / (fp_star / n0)
        lo, hi = np.quantile(lr_star, [(1 - level) / 2, 0.5 + level / 2])
        point = (max(counts.tp, 0.5) / n1) / (max(counts.fp, 0.5) / n0)
        return IntervalEstimate(
            point=point,
            lower=min(float(lo), point),
            upper=max(float(hi), point),
            level=level,
            method="bootstrap-percentile",
        )
    raise ValueError(f"unknown method {method!r}")


def projected_ppv(lr_est: IntervalEstimate, pi) -> IntervalEstimate:
    """Map an LR interval to a PPV interval at base rate ``pi``.

    ppv_from_lr is monotone in LR, so interval endpoints map to endpoints.
    """
    if lr_est.point <= 0:
        raise ValueError("LR point estimate must be positive")
    pi = _as_base_rate(pi)
    return IntervalEstimate(
        point=ppv_from_lr(lr_est.point, pi),
        lower=ppv_from_lr(max(lr_est.lower, 0.0), pi),
        upper=ppv_from_lr(lr_est.upper, pi),
        level=lr_est.level,
        method=f"monotone-map({lr_est.method})",
    )


def auc_rank_estimate(records: Sequence[AuditRecord]) -> float:
    """Rank-based AUC: fraction of (positive, negative) pairs ranked correctly,
    ties counted one half (Mann-Whitney statistic)."""
    y = np.array([r.outcome for r in records])
    scores = np.array([r.score for r in records], dtype=float)
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("need at least one positive and one negative")
    ranks = rankdata(scores)
    return float((ranks[y == 1].sum() - n1 * (n1 + 1) / 2) / (n1 * n0))


def binormal_operating_point(auc: float, flag_fraction: float, pi):
    """Operating point implied by an AUC under the equal-variance binormal model.

    Class-conditional scores are unit normals separated by
    d' = sqrt(2) * Phi^{-1}(auc); the cutoff t is solved so the population
    flag rate pi*Q(t - d') + (1 - pi)*Q(t) equals ``flag_fraction``
    (Q = standard normal survival). Returns the PrecisionSummary and the
    OperatingPoint at that cutoff.
    """
    if not 0.5 < auc < 1:
        raise ValueError(f"AUC must lie strictly in (0.5, 1), got {auc!r}")
    if not 0 < flag_fraction < 1:
        raise ValueError(f"flag fraction must lie strictly in (0, 1), got {flag_fraction!r}")
    pi = _as_base_rate(pi)
    dprime = math.sqrt(2) * norm.ppf(auc)

    def excess(t):
        return pi.value * norm.sf(t - dprime) + (1 - pi.value) * norm.sf(t) - flag_fraction

    lo, hi = -40.0, 40.0 + dprime
    if not (excess(lo) > 0 > excess(hi)):
        raise ValueError("no root in search bracket")
    t = brentq(excess, lo, hi, xtol=1e-13)
    point = OperatingPoint(float(norm.sf(t - dprime)), float(norm.sf(t)))
    return PrecisionSummary.from_lr(point.lr, pi), point


@dataclass(frozen=True)
class GroupAmplificationRow:
    group: str
    n: int
    mean_factors: float
    fpr: float
    factor_ratio: float
    fpr_ratio: float
    superlinear: bool


@dataclass(frozen=True)
class GroupAmplificationReport:
    reference_group: str
    rows: tuple[GroupAmplificationRow, ...] = field(default_factory=tuple)

    @property
    def any_superlinear(self) -> bool:
        return any(r.superlinear for r in self.rows)


def group_amplification(
    records: Sequence[AuditRecord],
    cutoff: CutoffSpec,
    factor_fields: Sequence[str],
    reference_group: str | None = None,
) -> GroupAmplificationReport:
    """Per-group mean factor count and FPR, with ratios against a reference group.

    The mean factor count averages the sum of the named binary factors over
    all group members; the FPR is taken among that group's negatives at the
    cutoff. A group is marked superlinear when its FPR ratio exceeds its
    factor-count ratio and both exceed 1. With no explicit reference, the
    group with the smallest mean factor count is used.
    """
    factor_fields = list(factor_fields)
    if not factor_fields:
        raise ValueError("need at least one factor column")
    by_group: dict[str, list[AuditRecord]] = {}
    for r in records:
        if r.group is None:
            raise ValueError("all records need a group label for amplification analysis")
        by_group.setdefault(r.group, []).append(r)
    if len(by_group) < 2:
        raise ValueError("need at least two groups")

    stats: dict[str, tuple[int, float, float]] = {}
    for g, members in by_group.items():
        total = 0
        for r in members:
            if r.factors is None:
                raise ValueError(f"record in group {g!r} has no factor columns")
            try:
                total += sum(r.factors[f] for f in factor_fields)
            except KeyError as exc:
                raise ValueError(f"missing factor column {exc.args[0]!r}") from None
        negatives = [r for r in members if r.outcome == 0]
        if not negatives:
            raise ValueError(f"group {g!r} has no negatives; FPR undefined")
        counts = confusion_at_cutoff(members, cutoff)
        stats[g] = (len(members), total / len(members), counts.fpr)

    if reference_group is None:
        reference_group = min(stats, key=lambda g: (stats[g][1], g))
    elif reference_group not in stats:
        raise ValueError(f"reference group {reference_group!r} not present")
    _, ref_mean, ref_fpr = stats[reference_group]
    if ref_mean == 0:
        raise ValueError(f"reference group {reference_group!r} has zero mean factor count")
    if ref_fpr == 0:
        raise ValueError(f"reference group {reference_group!r} has zero FPR; ratios undefined")

    rows = []
    order = [reference_group] + sorted(g for g in stats if g != reference_group)
    for g in order:
        n, mean, fpr = stats[g]
        factor_ratio = mean / ref_mean
        fpr_ratio = fpr / ref_fpr
        rows.append(
            GroupAmplificationRow(
                group=g,
                n=n,
                mean_factors=mean,
                fpr=fpr,
                factor_ratio=factor_ratio,
                fpr_ratio=fpr_ratio,
                superlinear=fpr_ratio > factor_ratio > 1,
            )
        )
    return GroupAmplificationReport(reference_group=reference_group, rows=tuple(rows))
