"""Estimation layer: confusion counting, intervals, AUC, binormal conversion,
group amplification."""

import math
import random

import numpy as np
import pytest
from scipy.stats import norm

import oracles
from precision_wall.bounds import ppv_from_lr
from precision_wall.ceiling import upper_tail
from precision_wall.metrics import (
    AuditRecord,
    ConfusionCounts,
    CutoffSpec,
    DECILE_AT_LEAST,
    EXPLICIT_FLAG_COLUMN,
    IntervalEstimate,
    SCORE_AT_LEAST,
    auc_rank_estimate,
    binormal_operating_point,
    confusion_at_cutoff,
    group_amplification,
    lr_with_ci,
    operating_point_with_ci,
    projected_ppv,
    wilson_interval,
)


def make_records(scores, outcomes, groups=None, factors=None):
    groups = groups or [None] * len(scores)
    factors = factors or [None] * len(scores)
    return [
        AuditRecord(score=s, outcome=y, group=g, factors=f)
        for s, y, g, f in zip(scores, outcomes, groups, factors)
    ]


class TestAuditRecord:
    def test_rejects_bad_outcome(self):
        with pytest.raises(ValueError):
            AuditRecord(score=1.0, outcome=2)

    def test_rejects_non_finite_score(self):
        with pytest.raises(ValueError):
            AuditRecord(score=float("inf"), outcome=0)

    def test_rejects_non_binary_factor(self):
        with pytest.raises(ValueError):
            AuditRecord(score=1.0, outcome=0, factors={"a": 3})


class TestConfusionAtCutoff:
    def test_hand_countable_four_records(self):
        records = make_records([9, 2, 8, 1], [1, 0, 0, 1])
        counts = confusion_at_cutoff(records, CutoffSpec(DECILE_AT_LEAST, 8))
        assert (counts.tp, counts.fp, counts.tn, counts.fn) == (1, 1, 1, 1)

    def test_cutoff_above_max_score(self):
        records = make_records([3, 5, 2], [1, 0, 1])
        counts = confusion_at_cutoff(records, CutoffSpec(SCORE_AT_LEAST, 6))
        assert counts.tp == 0 and counts.fp == 0
        assert counts.total == 3

    def test_random_set_matches_recount_oracle_exactly(self):
        rng = random.Random(42)
        scores = [rng.uniform(0, 10) for _ in range(200)]
        outcomes = [rng.randint(0, 1) for _ in range(200)]
        records = make_records(scores, outcomes)
        for threshold in (0.0, 2.5, scores[17], 9.99):
            counts = confusion_at_cutoff(records, CutoffSpec(SCORE_AT_LEAST, threshold))
            assert (counts.tp, counts.fp, counts.tn, counts.fn) == oracles.vector_confusion(
                scores, outcomes, threshold
            )

    def test_counts_partition_records(self):
        rng = random.Random(1)
        records = make_records(
            [rng.gauss(0, 1) for _ in range(157)], [rng.randint(0, 1) for _ in range(157)]
        )
        counts = confusion_at_cutoff(records, CutoffSpec(SCORE_AT_LEAST, 0.3))
        assert counts.total == 157

    def test_monotone_flag_sets(self):
        rng = random.Random(2)
        records = make_records(
            [rng.uniform(0, 1) for _ in range(300)], [rng.randint(0, 1) for _ in range(300)]
        )
        prev_tp, prev_fp = math.inf, math.inf
        for threshold in np.linspace(0, 1, 17):
            counts = confusion_at_cutoff(records, CutoffSpec(SCORE_AT_LEAST, float(threshold)))
            assert counts.tp <= prev_tp and counts.fp <= prev_fp
            prev_tp, prev_fp = counts.tp, counts.fp

    def test_explicit_flag_column(self):
        records = make_records(
            [1, 2, 3], [1, 0, 1], factors=[{"flag": 1}, {"flag": 0}, {"flag": 1}]
        )
        counts = confusion_at_cutoff(records, CutoffSpec(EXPLICIT_FLAG_COLUMN, "flag"))
        assert (counts.tp, counts.fp, counts.tn, counts.fn) == (2, 0, 1, 0)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            confusion_at_cutoff([], CutoffSpec(SCORE_AT_LEAST, 1))

    def test_unresolvable_cutoff(self):
        with pytest.raises(ValueError):
            confusion_at_cutoff(make_records([1], [1]), CutoffSpec(EXPLICIT_FLAG_COLUMN, "nope"))


class TestOperatingPointWithCi:
    def test_symmetric_point(self):
        s, q = operating_point_with_ci(ConfusionCounts(tp=50, fp=10, tn=90, fn=50), 0.95)
        assert s.point == pytest.approx(0.5)
        assert s.lower + s.upper == pytest.approx(1.0, abs=1e-9)

    def test_matches_direct_wilson_formula(self):
        counts = ConfusionCounts(tp=8, fp=3, tn=97, fn=12)
        s, q = operating_point_with_ci(counts, 0.95)
        z = norm.ppf(0.975)
        lo, hi = oracles.wilson_direct(8, 20, z)
        assert (s.lower, s.upper) == pytest.approx((lo, hi), rel=1e-12)
        lo, hi = oracles.wilson_direct(3, 100, z)
        assert (q.lower, q.upper) == pytest.approx((lo, hi), rel=1e-12)
        assert s.method == q.method == "wilson"

    def test_width_shrinks_with_counts(self):
        narrow_prev = None
        for scale in (1, 4, 16):
            s, _ = operating_point_with_ci(
                ConfusionCounts(tp=20 * scale, fp=5 * scale, tn=95 * scale, fn=30 * scale)
            )
            width = s.upper - s.lower
            if narrow_prev is not None:
                assert width < narrow_prev / 1.7  # roughly halves per 4x
            narrow_prev = width

    def test_point_inside_interval(self):
        rng = random.Random(8)
        for _ in range(200):
            n1, n0 = rng.randint(1, 500), rng.randint(1, 500)
            tp, fp = rng.randint(0, n1), rng.randint(0, n0)
            s, q = operating_point_with_ci(
                ConfusionCounts(tp=tp, fp=fp, tn=n0 - fp, fn=n1 - tp)
            )
            assert s.lower <= s.point <= s.upper
            assert q.lower <= q.point <= q.upper

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            operating_point_with_ci(ConfusionCounts(tp=5, fp=0, tn=0, fn=5))


class TestLrWithCi:
    def test_equal_rates_give_unit_lr(self):
        est = lr_with_ci(ConfusionCounts(tp=30, fn=30, fp=20, tn=20))
        assert est.point == pytest.approx(1.0)
        assert est.lower < 1 < est.upper

    def test_analytic_interval_formula(self):
        counts = ConfusionCounts(tp=40, fn=60, fp=15, tn=185)
        est = lr_with_ci(counts, 0.95)
        s, q = 0.4, 0.075
        se = math.sqrt((1 - s) / (s * 100) + (1 - q) / (q * 200))
        z = norm.ppf(0.975)
        assert est.point == pytest.approx(s / q, rel=1e-12)
        assert est.lower == pytest.approx((s / q) * math.exp(-z * se), rel=1e-12)
        assert est.upper == pytest.approx((s / q) * math.exp(z * se), rel=1e-12)

    def test_zero_cell_needs_bootstrap(self):
        counts = ConfusionCounts(tp=10, fn=0, fp=2, tn=88)
        with pytest.raises(ValueError):
            lr_with_ci(counts, method="analytic")
        est = lr_with_ci(counts, method="bootstrap", seed=1)
        assert est.method == "bootstrap-percentile"
        assert est.lower <= est.point <= est.upper

    def test_bootstrap_deterministic_for_fixed_seed(self):
        counts = ConfusionCounts(tp=12, fn=38, fp=9, tn=141)
        a = lr_with_ci(counts, method="bootstrap", seed=77)
        b = lr_with_ci(counts, method="bootstrap", seed=77)
        assert (a.lower, a.point, a.upper) == (b.lower, b.point, b.upper)

    def test_analytic_overlaps_large_bootstrap_oracle(self):
        rng = random.Random(314)
        overlaps = 0
        cases = 0
        for _ in range(40):
            n1, n0 = rng.randint(20, 200), rng.randint(20, 400)
            tp = rng.randint(3, n1 - 3)
            fp = rng.randint(3, n0 - 3)
            counts = ConfusionCounts(tp=tp, fn=n1 - tp, fp=fp, tn=n0 - fp)
            est = lr_with_ci(counts, 0.95)
            lo, hi = oracles.bootstrap_lr_percentile(
                tp, fp, n0 - fp, n1 - tp, 0.95, replicates=100_000, seed=rng.randint(0, 2**31)
            )
            cases += 1
            if est.lower <= hi and lo <= est.upper:
                overlaps += 1
        assert overlaps / cases >= 0.9


class TestProjectedPpv:
    def test_published_projection_point(self):
        est = IntervalEstimate(point=4.3, lower=4.3, upper=4.3)
        out = projected_ppv(est, 0.03)
        assert 100 * out.point == pytest.approx(12, abs=0.5)

    def test_published_interval_mapping(self):
        est = IntervalEstimate(point=4.3, lower=3.1, upper=5.8)
        out = projected_ppv(est, 0.173)
        assert 100 * out.lower == pytest.approx(41, abs=3)
        assert 100 * out.upper == pytest.approx(53, abs=3)

    def test_degenerate_interval(self):
        out = projected_ppv(IntervalEstimate(point=4, lower=4, upper=4), 0.1)
        assert out.lower == out.point == out.upper

    def test_monotone_widening(self):
        narrow = projected_ppv(IntervalEstimate(point=4, lower=3.5, upper=4.5), 0.1)
        wide = projected_ppv(IntervalEstimate(point=4, lower=2.5, upper=6.5), 0.1)
        assert wide.upper - wide.lower > narrow.upper - narrow.lower

    def test_endpoints_map_to_endpoints(self):
        est = IntervalEstimate(point=3.0, lower=2.0, upper=5.0)
        out = projected_ppv(est, 0.2)
        assert out.lower == pytest.approx(ppv_from_lr(2.0, 0.2), rel=1e-15)
        assert out.upper == pytest.approx(ppv_from_lr(5.0, 0.2), rel=1e-15)


class TestAucRankEstimate:
    def test_perfect_separation(self):
        records = make_records([1, 2, 3, 10, 11], [0, 0, 0, 1, 1])
        assert auc_rank_estimate(records) == 1.0

    def test_all_ties(self):
        records = make_records([5, 5, 5, 5], [0, 1, 0, 1])
        assert auc_rank_estimate(records) == 0.5

    def test_matches_pair_enumeration_oracle_exactly(self):
        rng = random.Random(17)
        scores = [rng.choice([1, 2, 2, 3, 5, 8, 8, 9]) + rng.random() * rng.choice([0, 1]) for _ in range(50)]
        outcomes = [rng.randint(0, 1) for _ in range(50)]
        if sum(outcomes) in (0, 50):
            outcomes[0] = 1 - outcomes[0]
        records = make_records(scores, outcomes)
        assert auc_rank_estimate(records) == pytest.approx(
            oracles.pairwise_auc(scores, outcomes), abs=1e-12
        )

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc_rank_estimate(make_records([1, 2], [1, 1]))


class TestBinormalOperatingPoint:
    def test_published_ppv_magnitudes(self):
        # same ranking performance, very different PPV as the outcome thins out
        for pi, approx_ppv in ((0.50, 0.70), (0.10, 0.25), (0.03, 0.10)):
            summary, _ = binormal_operating_point(0.70, 0.20, pi)
            assert 100 * summary.ppv == pytest.approx(100 * approx_ppv, abs=6)

    def test_flag_fraction_is_respected(self):
        summary, point = binormal_operating_point(0.70, 0.20, 0.03)
        flagged = 0.03 * point.sensitivity + 0.97 * point.fpr
        assert flagged == pytest.approx(0.20, abs=1e-9)

    def test_no_signal_limit(self):
        summary, point = binormal_operating_point(0.5001, 0.2, 0.03)
        assert summary.lr == pytest.approx(1.0, abs=0.01)
        assert summary.ppv == pytest.approx(0.03, abs=0.002)

    def test_lr_exceeds_one_for_informative_auc(self):
        rng = random.Random(23)
        for _ in range(50):
            auc = rng.uniform(0.501, 0.99)
            f = rng.uniform(0.01, 0.9)
            pi = rng.uniform(0.005, 0.6)
            summary, _ = binormal_operating_point(auc, f, pi)
            assert summary.lr > 1

    def test_ppv_increasing_in_base_rate(self):
        values = [binormal_operating_point(0.7, 0.2, pi)[0].ppv for pi in (0.01, 0.05, 0.2, 0.5)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            binormal_operating_point(0.5, 0.2, 0.1)
        with pytest.raises(ValueError):
            binormal_operating_point(0.7, 0.0, 0.1)


class TestGroupAmplification:
    @staticmethod
    def synthetic_two_group(seed=5, n=4000, k=10, p_a=0.15, p_b=0.35, p_pos=0.68, pi=0.05):
        rng = np.random.default_rng(seed)
        records = []
        for group, p_neg in (("A", p_a), ("B", p_b)):
            y = rng.random(n) < pi
            p = np.where(y, p_pos, p_neg)
            markers = rng.random((n, k)) < p[:, None]
            for i in range(n):
                factors = {f"m{j}": int(markers[i, j]) for j in range(k)}
                records.append(
                    AuditRecord(
                        score=float(markers[i].sum()),
                        outcome=int(y[i]),
                        group=group,
                        factors=factors,
                    )
                )
        return records

    def test_identical_groups_have_unit_ratios(self):
        rng = random.Random(9)
        base = [
            (rng.uniform(0, 5), rng.randint(0, 1), {"f": rng.randint(0, 1)}) for _ in range(100)
        ]
        records = [
            AuditRecord(score=s, outcome=y, group=g, factors=f)
            for g in ("X", "Y")
            for s, y, f in base
        ]
        out = group_amplification(records, CutoffSpec(SCORE_AT_LEAST, 2.5), ["f"])
        for row in out.rows:
            assert row.factor_ratio == pytest.approx(1.0)
            assert row.fpr_ratio == pytest.approx(1.0)
            assert not row.superlinear

    def test_synthetic_groups_show_superlinear_amplification(self):
        k, p_a, p_b, m = 10, 0.15, 0.35, 6
        records = self.synthetic_two_group(p_a=p_a, p_b=p_b, k=k)
        fields = [f"m{j}" for j in range(k)]
        out = group_amplification(
            records, CutoffSpec(SCORE_AT_LEAST, m), fields, reference_group="A"
        )
        rows = {r.group: r for r in out.rows}
        # empirical FPRs agree with the exact model tails
        for group, p in (("A", p_a), ("B", p_b)):
            exact = upper_tail(k, p, m)
            se = math.sqrt(exact * (1 - exact) / 3800)
            assert rows[group].fpr == pytest.approx(exact, abs=5 * se + 1e-3)
        assert rows["B"].fpr_ratio > rows["B"].factor_ratio > 1
        assert rows["B"].superlinear
        assert out.any_superlinear

    def test_errors(self):
        records = self.synthetic_two_group(n=50)
        with pytest.raises(ValueError):
            group_amplification(records, CutoffSpec(SCORE_AT_LEAST, 5), ["missing"])
        one_group = [r for r in records if r.group == "A"]
        with pytest.raises(ValueError):
            group_amplification(one_group, CutoffSpec(SCORE_AT_LEAST, 5), ["m0"])

    def test_group_with_no_negatives_rejected(self):
        records = [
            AuditRecord(score=1.0, outcome=1, group="A", factors={"f": 1}),
            AuditRecord(score=2.0, outcome=0, group="B", factors={"f": 0}),
            AuditRecord(score=1.5, outcome=1, group="B", factors={"f": 1}),
        ]
        with pytest.raises(ValueError):
            group_amplification(records, CutoffSpec(SCORE_AT_LEAST, 1.2), ["f"])
