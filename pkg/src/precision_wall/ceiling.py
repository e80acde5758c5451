"""Count-threshold classifiers over correlated binary risk markers.

Two populations share an outcome base rate but differ in how often their
negative class accumulates recorded risk markers. A count-threshold
classifier flags anyone whose marker count reaches m. This module computes
the resulting rates exactly (no sampling): marker-count distributions for
exchangeable Bernoulli markers, upper tails in log space, per-threshold
sensitivity / FPR / LR / PPV / NND sweeps, the Bernoulli KL rate function
governing how fast the group FPR ratio diverges, and the two canned
two-group scenarios used by the CLI.

Correlated markers use the beta-binomial mixture: marker probability drawn
once per individual from Beta(alpha, beta) with alpha = p(1-rho)/rho,
beta = (1-p)(1-rho)/rho, then markers i.i.d. given that draw. This is the
standard exchangeable family with closed-form counts whose marginal mean is
exactly p and whose pairwise marker correlation is exactly rho; rho = 0 is
the plain binomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .bounds import BaseRate, _as_base_rate, nnd_from_ppv, ppv_from_lr

__all__ = [
    "GroupFeatureModel",
    "ThresholdRule",
    "CeilingRow",
    "CeilingReport",
    "ScenarioResult",
    "VariantComparison",
    "SlopeConvergence",
    "count_pmf",
    "log_upper_tail",
    "upper_tail",
    "classifier_rates",
    "kl_rate",
    "fpr_ratio_slope",
    "ceiling_sweep",
    "table2_scenario",
    "variant_scenario",
    "TABLE2_DEFAULTS",
]


@dataclass(frozen=True)
class GroupFeatureModel:
    """Marker generation for one group: k exchangeable binary markers with
    class-conditional prevalence p_pos / p_neg and pairwise correlation rho."""

    k: int
    p_pos: float
    p_neg: float
    rho: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        for name in ("p_pos", "p_neg"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie strictly in (0, 1), got {v!r}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must lie in [0, 1); rho = 1 is degenerate, got {self.rho!r}")


EXPLICIT_COUNT = "explicit-count"
FRACTION = "fraction"


@dataclass(frozen=True)
class ThresholdRule:
    """Flag when the marker count reaches a threshold.

    Either an explicit count m, or a fraction theta of k with
    m = ceil(k * theta). m = k + 1 is allowed as the never-fires flag.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in (EXPLICIT_COUNT, FRACTION):
            raise ValueError(f"rule kind must be {EXPLICIT_COUNT!r} or {FRACTION!r}")
        if self.kind == FRACTION and not 0 < self.value < 1:
            raise ValueError(f"fraction threshold must lie in (0, 1), got {self.value!r}")
        if self.kind == EXPLICIT_COUNT and (self.value != int(self.value) or self.value < 1):
            raise ValueError(f"explicit count must be a positive integer, got {self.value!r}")

    def resolve(self, k: int) -> int:
        if self.kind == EXPLICIT_COUNT:
            m = int(self.value)
            if m > k + 1:
                raise ValueError(f"count threshold {m} out of range for k = {k}")
            return m
        # round() guards float dust like 10*0.3 = 3.0000000000000004
        return math.ceil(round(k * self.value, 9))


def _log_count_pmf(k: int, p: float, rho: float) -> np.ndarray:
    j = np.arange(k + 1)
    log_choose = gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
    if rho == 0.0:
        return log_choose + j * math.log(p) + (k - j) * math.log1p(-p)
    s = (1.0 - rho) / rho
    a, b = p * s, (1.0 - p) * s
    return log_choose + betaln(j + a, k - j + b) - betaln(a, b)


def count_pmf(k: int, p: float, rho: float = 0.0) -> np.ndarray:
    """Distribution of the marker count over {0..k}.

    Exchangeable Bernoulli(p) markers with pairwise correlation rho; the
    beta-binomial mixture for rho > 0, exactly binomial at rho = 0.
    """
    GroupFeatureModel(k=k, p_pos=p, p_neg=p, rho=rho)  # parameter validation
    return np.exp(_log_count_pmf(k, p, rho))


def log_upper_tail(k: int, p: float, m: int, rho: float = 0.0) -> float:
    """log P(count >= m), accumulated in log space so tiny tails stay exact
    in relative terms (needed for tail ratios near 1e-40 and below)."""
    if m <= 0:
        return 0.0
    if m > k:
        return -math.inf
    return float(logsumexp(_log_count_pmf(k, p, rho)[m:]))


def upper_tail(k: int, p: float, m: int, rho: float = 0.0) -> float:
    """P(count >= m)."""
    return math.exp(log_upper_tail(k, p, m, rho))


def classifier_rates(
    pos_model: GroupFeatureModel,
    neg_models: Mapping[str, GroupFeatureModel],
    rule: ThresholdRule,
):
    """Exact (sensitivity, per-group FPR) of the count-threshold flag."""
    ks = {pos_model.k} | {m.k for m in neg_models.values()}
    if len(ks) != 1:
        raise ValueError(f"all models must share one k, got {sorted(ks)}")
    k = pos_model.k
    m = rule.resolve(k)
    s = upper_tail(k, pos_model.p_pos, m, pos_model.rho)
    q = {g: upper_tail(k, mdl.p_neg, m, mdl.rho) for g, mdl in neg_models.items()}
    return s, q


def kl_rate(theta: float, p: float) -> float:
    """Bernoulli KL divergence D(theta || p) in nats.

    This is the large-deviation decay rate of P(mean marker >= theta) for
    i.i.d. Bernoulli(p) markers: nonnegative, zero iff theta = p.
    """
    for name, v in (("theta", theta), ("p", p)):
        if not 0 < v < 1:
            raise ValueError(f"{name} must lie strictly in (0, 1), got {v!r}")
    return theta * math.log(theta / p) + (1 - theta) * math.log((1 - theta) / (1 - p))


@dataclass(frozen=True)
class SlopeConvergence:
    """Per-k FPR-ratio growth rates against their large-deviation limit."""

    per_k: tuple[tuple[int, int, float], ...]  # (k, m, slope)
    limit: float
    final_abs_deviation: float
    final_rel_deviation: float
    regime_ok: bool
    warning: str | None = None


def fpr_ratio_slope(p_a: float, p_b: float, theta: float, k_list) -> SlopeConvergence:
    """Exponential growth rate of the group FPR ratio for independent markers.

    For each k, computes (1/k) * log(q_B / q_A) from exact binomial tails at
    m = ceil(k * theta) and reports convergence toward the limit
    D(theta || p_A) - D(theta || p_B). The limit is positive exactly in the
    regime theta > p_B > p_A; outside it the computation is still returned,
    with a warning.
    """
    k_list = [int(k) for k in k_list]
    if not k_list or any(b <= a for a, b in zip(k_list, k_list[1:])) or k_list[0] < 1:
        raise ValueError("k_list must be a nonempty ascending list of positive integers")
    limit = kl_rate(theta, p_a) - kl_rate(theta, p_b)
    warning = None
    regime_ok = theta > max(p_a, p_b)
    if not regime_ok:
        warning = (
            f"threshold fraction {theta} does not exceed both negative-class "
            f"prevalences ({p_a}, {p_b}); the exponential-divergence regime does not apply"
        )
    rule = ThresholdRule(FRACTION, theta)
    per_k = []
    for k in k_list:
        m = rule.resolve(k)
        slope = (log_upper_tail(k, p_b, m) - log_upper_tail(k, p_a, m)) / k
        per_k.append((k, m, slope))
    final = per_k[-1][2]
    abs_dev = abs(final - limit)
    rel_dev = abs_dev / abs(limit) if limit != 0 else abs_dev
    return SlopeConvergence(
        per_k=tuple(per_k),
        limit=limit,
        final_abs_deviation=abs_dev,
        final_rel_deviation=rel_dev,
        regime_ok=regime_ok,
        warning=warning,
    )


@dataclass(frozen=True)
class CeilingRow:
    """Per-group rates of the count-threshold flag at one threshold m."""

    m: int
    sensitivity: dict
    fpr: dict
    lr: dict
    ppv: dict
    nnd: dict


@dataclass(frozen=True)
class CeilingReport:
    """Full threshold sweep with per-group LR suprema."""

    groups: tuple[str, ...]
    rows: tuple[CeilingRow, ...]
    sup_lr: dict
    base_rate: BaseRate
    assumptions_hold: bool
    annotations: tuple[str, ...] = ()

    def row(self, m: int) -> CeilingRow:
        for r in self.rows:
            if r.m == m:
                return r
        raise KeyError(f"no row for m = {m}")


def ceiling_sweep(pos_model, neg_models: Mapping[str, GroupFeatureModel], pi) -> CeilingReport:
    """Evaluate the flag at every threshold m in 1..k for each group.

    ``pos_model`` is a single GroupFeatureModel shared by all groups, or a
    per-group mapping when positive-class marker prevalence differs. The
    two-group comparison carries its directional guarantees (higher
    negative-class prevalence implies higher FPR, lower LR, lower PPV at
    every threshold) only when the positive-class models are identical;
    otherwise the report is annotated accordingly.
    """
    pi = _as_base_rate(pi)
    groups = tuple(neg_models)
    if not groups:
        raise ValueError("need at least one group")
    pos_by_group = (
        dict(pos_model) if isinstance(pos_model, Mapping) else {g: pos_model for g in groups}
    )
    if set(pos_by_group) != set(groups):
        raise ValueError("per-group positive models must cover exactly the negative-model groups")
    ks = {m.k for m in neg_models.values()} | {m.k for m in pos_by_group.values()}
    if len(ks) != 1:
        raise ValueError(f"all models must share one k, got {sorted(ks)}")
    k = next(iter(ks))

    annotations = []
    shared_pos = len({(m.p_pos, m.rho) for m in pos_by_group.values()}) == 1
    if not shared_pos:
        annotations.append(
            "positive-class models differ across groups; ceiling comparison is descriptive only"
        )
    assumptions_hold = shared_pos and len(groups) == 2 and (
        neg_models[groups[0]].p_neg != neg_models[groups[1]].p_neg
    )

    rows = []
    sup_lr = {g: 0.0 for g in groups}
    for m in range(1, k + 1):
        s = {g: upper_tail(k, pos_by_group[g].p_pos, m, pos_by_group[g].rho) for g in groups}
        q = {g: upper_tail(k, neg_models[g].p_neg, m, neg_models[g].rho) for g in groups}
        lr = {g: s[g] / q[g] for g in groups}
        ppv = {g: ppv_from_lr(lr[g], pi) for g in groups}
        nnd = {g: nnd_from_ppv(ppv[g]) for g in groups}
        for g in groups:
            sup_lr[g] = max(sup_lr[g], lr[g])
        rows.append(CeilingRow(m=m, sensitivity=s, fpr=q, lr=lr, ppv=ppv, nnd=nnd))

    return CeilingReport(
        groups=groups,
        rows=tuple(rows),
        sup_lr=sup_lr,
        base_rate=pi,
        assumptions_hold=assumptions_hold,
        annotations=tuple(annotations),
    )


TABLE2_DEFAULTS = dict(
    k=10,
    rho=0.2,
    p_pos_a=0.68,
    p_pos_b=None,  # defaults to p_pos_a
    p_neg_a=0.15,
    p_neg_b=0.35,
    pi=0.03,
    target_sensitivity=0.624,
)


@dataclass(frozen=True)
class ScenarioResult:
    """A two-group ceiling sweep with one derived operating threshold."""

    report: CeilingReport
    selected_m: int
    target_sensitivity: float

    @property
    def selected(self) -> CeilingRow:
        return self.report.row(self.selected_m)

    @property
    def lr_gap(self) -> float:
        row = self.selected
        return row.lr["A"] / row.lr["B"]

    @property
    def ppv_gap(self) -> float:
        row = self.selected
        return row.ppv["A"] / row.ppv["B"]


def table2_scenario(
    k: int = 10,
    rho: float = 0.2,
    p_pos_a: float = 0.68,
    p_pos_b: float | None = None,
    p_neg_a: float = 0.15,
    p_neg_b: float = 0.35,
    pi: float = 0.03,
    target_sensitivity: float = 0.624,
    m: int | None = None,
) -> ScenarioResult:
    """Canned two-group ceiling scenario over correlated markers.

    The operating threshold is derived, not hard-coded: m is the count whose
    group-A sensitivity is nearest ``target_sensitivity`` (ties go to the
    smaller m). Pass ``m`` explicitly to pin the threshold instead, e.g.
    when comparing against a baseline run.
    """
    if p_pos_b is None:
        p_pos_b = p_pos_a
    pos = {
        "A": GroupFeatureModel(k=k, p_pos=p_pos_a, p_neg=p_neg_a, rho=rho),
        "B": GroupFeatureModel(k=k, p_pos=p_pos_b, p_neg=p_neg_b, rho=rho),
    }
    neg = pos  # same model objects carry the negative-class parameters
    report = ceiling_sweep(pos, neg, pi)
    if m is None:
        m = min(
            (row.m for row in report.rows),
            key=lambda mm: (abs(report.row(mm).sensitivity["A"] - target_sensitivity), mm),
        )
    else:
        report.row(m)  # validate
    return ScenarioResult(report=report, selected_m=m, target_sensitivity=target_sensitivity)


@dataclass(frozen=True)
class VariantComparison:
    """Baseline scenario vs a positive-class-shift variant at the same threshold."""

    baseline: ScenarioResult
    variant: ScenarioResult

    @property
    def direction_preserved(self) -> bool:
        row = self.variant.selected
        return row.lr["A"] > row.lr["B"] and row.ppv["A"] > row.ppv["B"]


def variant_scenario(p_pos_b: float = 0.75, **overrides) -> VariantComparison:
    """Baseline scenario paired with a variant whose group-B positive-class
    prevalence is raised; the variant keeps the baseline's derived threshold,
    so only the data distribution changes, not the classifier."""
    baseline = table2_scenario(**overrides)
    variant = table2_scenario(p_pos_b=p_pos_b, m=baseline.selected_m, **overrides)
    return VariantComparison(baseline=baseline, variant=variant)
