"""Exact count-threshold computations: pmfs, tails, KL rates, ceiling sweeps."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binom

import oracles
from precision_wall.ceiling import (
    EXPLICIT_COUNT,
    FRACTION,
    GroupFeatureModel,
    ThresholdRule,
    ceiling_sweep,
    classifier_rates,
    count_pmf,
    fpr_ratio_slope,
    kl_rate,
    log_upper_tail,
    table2_scenario,
    upper_tail,
    variant_scenario,
)


class TestCountPmf:
    def test_rho_zero_is_exactly_binomial(self):
        for k, p in ((1, 0.3), (10, 0.15), (25, 0.68)):
            mine = count_pmf(k, p)
            ref = binom.pmf(np.arange(k + 1), k, p)
            assert np.allclose(mine, ref, rtol=1e-12, atol=0)

    def test_k_one_is_bernoulli_for_any_rho(self):
        for rho in (0.0, 0.2, 0.7):
            pmf = count_pmf(1, 0.35, rho)
            assert pmf[0] == pytest.approx(0.65, rel=1e-12)
            assert pmf[1] == pytest.approx(0.35, rel=1e-12)

    def test_sums_to_one_and_mean_kp(self):
        rng = random.Random(1)
        for _ in range(50):
            k = rng.randint(1, 40)
            p = rng.uniform(0.02, 0.98)
            rho = rng.choice([0.0, rng.uniform(0, 0.9)])
            pmf = count_pmf(k, p, rho)
            assert abs(pmf.sum() - 1.0) < 1e-12
            mean = float(np.dot(np.arange(k + 1), pmf))
            assert abs(mean - k * p) < 1e-10

    def test_variance_nondecreasing_in_rho(self):
        k, p = 12, 0.3
        j = np.arange(k + 1)
        prev = -1.0
        for rho in (0.0, 0.1, 0.3, 0.5, 0.8):
            pmf = count_pmf(k, p, rho)
            var = float(np.dot(j * j, pmf) - np.dot(j, pmf) ** 2)
            assert var >= prev
            prev = var

    def test_matches_monte_carlo_mixture(self):
        pmf = count_pmf(10, 0.35, 0.2)
        mc = oracles.betabinomial_mc_pmf(10, 0.35, 0.2, n_samples=10_000_000, seed=20260809)
        tv = 0.5 * float(np.abs(pmf - mc).sum())
        assert tv < 1e-3

    def test_rho_one_rejected(self):
        with pytest.raises(ValueError):
            count_pmf(10, 0.5, 1.0)


class TestTails:
    def test_impossible_threshold(self):
        assert upper_tail(10, 0.5, 11) == 0.0
        assert log_upper_tail(10, 0.5, 11) == -math.inf

    def test_threshold_zero_or_below_is_certain(self):
        assert upper_tail(10, 0.5, 0) == 1.0

    def test_independent_tail_matches_exact_rational_oracle(self):
        exact = oracles.binomial_tail_exact(10, Fraction(15, 100), 7)
        assert upper_tail(10, 0.15, 7) == pytest.approx(float(exact), rel=1e-12)

    def test_deep_tail_stays_accurate_in_log_space(self):
        # k = 400 at threshold 200: tail around 1e-60
        exact = oracles.binomial_tail_exact(400, Fraction(15, 100), 200)
        got = log_upper_tail(400, 0.15, 200)
        assert got == pytest.approx(float(exact.ln() if hasattr(exact, "ln") else math.log(exact)), rel=1e-10)


class TestThresholdRule:
    def test_fraction_resolution_handles_float_dust(self):
        assert ThresholdRule(FRACTION, 0.5).resolve(50) == 25
        assert ThresholdRule(FRACTION, 0.3).resolve(10) == 3
        assert ThresholdRule(FRACTION, 0.65).resolve(10) == 7
        assert ThresholdRule(FRACTION, 0.301).resolve(10) == 4

    def test_explicit_count_bounds(self):
        assert ThresholdRule(EXPLICIT_COUNT, 11).resolve(10) == 11  # never fires
        with pytest.raises(ValueError):
            ThresholdRule(EXPLICIT_COUNT, 12).resolve(10)
        with pytest.raises(ValueError):
            ThresholdRule(EXPLICIT_COUNT, 0)

    def test_fraction_range(self):
        with pytest.raises(ValueError):
            ThresholdRule(FRACTION, 1.2)


class TestClassifierRates:
    def test_never_firing_flag(self):
        model = GroupFeatureModel(k=10, p_pos=0.68, p_neg=0.15)
        s, q = classifier_rates(model, {"A": model}, ThresholdRule(EXPLICIT_COUNT, 11))
        assert s == 0.0 and q["A"] == 0.0

    def test_independent_case_matches_binomial_summation(self):
        model = GroupFeatureModel(k=10, p_pos=0.68, p_neg=0.15)
        s, q = classifier_rates(model, {"A": model}, ThresholdRule(EXPLICIT_COUNT, 7))
        exact = oracles.binomial_tail_exact(10, Fraction(15, 100), 7)
        assert q["A"] == pytest.approx(float(exact), rel=1e-12)

    def test_default_scenario_rates(self):
        # correlated two-group defaults; values pinned from the exact pmf sums
        pos = GroupFeatureModel(k=10, p_pos=0.68, p_neg=0.15, rho=0.2)
        neg = {
            "A": GroupFeatureModel(k=10, p_pos=0.68, p_neg=0.15, rho=0.2),
            "B": GroupFeatureModel(k=10, p_pos=0.68, p_neg=0.35, rho=0.2),
        }
        s, q = classifier_rates(pos, neg, ThresholdRule(EXPLICIT_COUNT, 7))
        pmf_pos = count_pmf(10, 0.68, 0.2)
        pmf_a = count_pmf(10, 0.15, 0.2)
        pmf_b = count_pmf(10, 0.35, 0.2)
        assert s == pytest.approx(float(pmf_pos[7:].sum()), rel=1e-12)
        assert q["A"] == pytest.approx(float(pmf_a[7:].sum()), rel=1e-12)
        assert q["B"] == pytest.approx(float(pmf_b[7:].sum()), rel=1e-12)

    def test_inconsistent_k_rejected(self):
        a = GroupFeatureModel(k=10, p_pos=0.5, p_neg=0.2)
        b = GroupFeatureModel(k=12, p_pos=0.5, p_neg=0.2)
        with pytest.raises(ValueError):
            classifier_rates(a, {"B": b}, ThresholdRule(EXPLICIT_COUNT, 5))


class TestKlRate:
    def test_zero_iff_equal(self):
        for p in (0.1, 0.5, 0.9):
            assert kl_rate(p, p) == 0.0
        assert kl_rate(0.4, 0.5) > 0

    def test_values_match_legendre_grid_oracle(self):
        assert kl_rate(0.5, 0.15) == pytest.approx(0.3367, abs=5e-5)
        assert kl_rate(0.5, 0.15) == pytest.approx(oracles.kl_legendre_grid(0.5, 0.15), abs=1e-6)
        assert kl_rate(0.5, 0.35) == pytest.approx(0.0472, abs=5e-5)
        assert kl_rate(0.5, 0.35) == pytest.approx(oracles.kl_legendre_grid(0.5, 0.35), abs=1e-6)

    def test_ordering_in_the_divergence_regime(self):
        assert kl_rate(0.5, 0.15) > kl_rate(0.5, 0.35)

    def test_decreasing_in_p_below_theta(self):
        theta = 0.6
        values = [kl_rate(theta, p) for p in (0.1, 0.2, 0.35, 0.5)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_boundary_inputs_rejected(self):
        for bad in ((0, 0.5), (1, 0.5), (0.5, 0), (0.5, 1)):
            with pytest.raises(ValueError):
                kl_rate(*bad)


class TestFprRatioSlope:
    def test_convergence_toward_kl_difference(self):
        result = fpr_ratio_slope(0.15, 0.35, 0.5, [50, 100, 200, 400])
        assert result.regime_ok
        assert result.limit == pytest.approx(0.2895, abs=5e-5)
        deviations = [abs(slope - result.limit) for _, _, slope in result.per_k]
        assert all(a > b for a, b in zip(deviations, deviations[1:]))
        assert result.final_rel_deviation < 0.05

    def test_equal_prevalences_give_zero_slope(self):
        result = fpr_ratio_slope(0.2, 0.2, 0.5, [10, 50])
        assert result.limit == 0.0
        assert all(slope == 0.0 for _, _, slope in result.per_k)

    def test_swapping_groups_negates(self):
        fwd = fpr_ratio_slope(0.15, 0.35, 0.5, [50, 100])
        rev = fpr_ratio_slope(0.35, 0.15, 0.5, [50, 100])
        assert rev.limit == pytest.approx(-fwd.limit, rel=1e-12)
        for (k1, m1, s1), (k2, m2, s2) in zip(fwd.per_k, rev.per_k):
            assert (k1, m1) == (k2, m2)
            assert s2 == pytest.approx(-s1, rel=1e-12)

    def test_regime_violation_warns_but_computes(self):
        result = fpr_ratio_slope(0.15, 0.35, 0.3, [10, 20])
        assert not result.regime_ok
        assert result.warning is not None
        assert len(result.per_k) == 2

    def test_bad_k_list_rejected(self):
        with pytest.raises(ValueError):
            fpr_ratio_slope(0.1, 0.3, 0.5, [100, 50])


def two_group_models(k, p_pos, p_neg_a, p_neg_b, rho=0.0):
    return {
        "A": GroupFeatureModel(k=k, p_pos=p_pos, p_neg=p_neg_a, rho=rho),
        "B": GroupFeatureModel(k=k, p_pos=p_pos, p_neg=p_neg_b, rho=rho),
    }


class TestCeilingSweep:
    def test_equal_negative_models_identical_columns(self):
        models = two_group_models(8, 0.6, 0.2, 0.2, rho=0.1)
        report = ceiling_sweep(models["A"], models, 0.05)
        for row in report.rows:
            assert row.fpr["A"] == row.fpr["B"]
            assert row.lr["A"] == row.lr["B"]
            assert row.ppv["A"] == row.ppv["B"]
        assert report.sup_lr["A"] == report.sup_lr["B"]

    def test_directional_ceiling_on_random_parameterizations(self):
        rng = random.Random(500)
        for _ in range(500):
            k = rng.randint(2, 16)
            p_pos = rng.uniform(0.3, 0.9)
            p_a = rng.uniform(0.02, 0.5)
            p_b = rng.uniform(p_a + 1e-6, 0.6)
            rho = rng.choice([0.0, rng.uniform(0, 0.6)])
            models = two_group_models(k, p_pos, p_a, p_b, rho)
            report = ceiling_sweep(models["A"], models, rng.uniform(0.005, 0.3))
            assert report.assumptions_hold
            assert report.sup_lr["B"] <= report.sup_lr["A"]
            for row in report.rows:
                assert row.fpr["B"] > row.fpr["A"]
                assert row.lr["B"] < row.lr["A"]
                assert row.ppv["B"] < row.ppv["A"]

    def test_annotated_when_positive_models_differ(self):
        models = {
            "A": GroupFeatureModel(k=6, p_pos=0.6, p_neg=0.1),
            "B": GroupFeatureModel(k=6, p_pos=0.8, p_neg=0.3),
        }
        report = ceiling_sweep(models, models, 0.05)
        assert not report.assumptions_hold
        assert report.annotations

    def test_superlinear_amplification_in_k(self):
        # FPR ratio grows faster than the marker-prevalence ratio
        p_a, p_b, theta = 0.15, 0.35, 0.5
        prevalence_ratio = p_b / p_a
        rule = ThresholdRule(FRACTION, theta)
        ratios = []
        for k in (4, 10, 20, 40):
            m = rule.resolve(k)
            ratios.append(upper_tail(k, p_b, m) / upper_tail(k, p_a, m))
        assert all(a < b for a, b in zip(ratios, ratios[1:]))
        assert ratios[1] > prevalence_ratio


class TestTable2Scenario:
    def test_derived_threshold_is_seven(self):
        result = table2_scenario()
        assert result.selected_m == 7

    def test_selected_row_values_match_exact_pmf_sums(self):
        result = table2_scenario()
        row = result.selected
        s_exact = float(count_pmf(10, 0.68, 0.2)[7:].sum())
        qa_exact = float(count_pmf(10, 0.15, 0.2)[7:].sum())
        qb_exact = float(count_pmf(10, 0.35, 0.2)[7:].sum())
        assert row.sensitivity["A"] == pytest.approx(s_exact, rel=1e-12)
        assert row.fpr["A"] == pytest.approx(qa_exact, rel=1e-12)
        assert row.fpr["B"] == pytest.approx(qb_exact, rel=1e-12)
        assert row.lr["A"] == pytest.approx(s_exact / qa_exact, rel=1e-12)

    def test_directional_ceiling_holds_at_every_threshold(self):
        result = table2_scenario()
        for row in result.report.rows:
            assert row.fpr["B"] > row.fpr["A"]
            assert row.lr["A"] > row.lr["B"]
            assert row.ppv["A"] > row.ppv["B"]

    def test_independence_override_keeps_direction(self):
        result = table2_scenario(rho=0.0)
        row = result.selected
        assert row.lr["A"] > row.lr["B"]

    def test_positive_shift_override(self):
        result = table2_scenario(p_pos_b=0.75, m=7)
        assert result.selected.sensitivity["B"] == pytest.approx(
            float(count_pmf(10, 0.75, 0.2)[7:].sum()), rel=1e-12
        )


class TestVariantScenario:
    def test_degenerate_variant_identical_to_baseline(self):
        comparison = variant_scenario(p_pos_b=0.68)
        b, v = comparison.baseline.selected, comparison.variant.selected
        assert b.lr == v.lr
        assert b.ppv == v.ppv

    def test_variant_keeps_baseline_threshold(self):
        comparison = variant_scenario()
        assert comparison.variant.selected_m == comparison.baseline.selected_m

    def test_gap_attenuates_but_direction_preserved(self):
        comparison = variant_scenario(p_pos_b=0.75)
        assert comparison.variant.lr_gap < comparison.baseline.lr_gap
        assert comparison.variant.ppv_gap < comparison.baseline.ppv_gap
        assert comparison.direction_preserved

    def test_sensitivity_rises_for_group_b(self):
        comparison = variant_scenario(p_pos_b=0.75)
        assert (
            comparison.variant.selected.sensitivity["B"]
            > comparison.baseline.selected.sensitivity["B"]
        )
