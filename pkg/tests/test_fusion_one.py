"""Tests for the single-sensor fusion analytics."""

import math

import numpy as np
import pytest
from scipy import integrate as sci_integrate

from detbench import (
    DegenerateRatesError,
    Prior,
    RatePair,
    REGIME_ALWAYS_H0,
    REGIME_ALWAYS_H1,
    REGIME_THRESHOLD,
    SensingModel,
    SensorRule,
    cdd_one_sensor_pe,
    channel_blind_threshold,
    classify_fc_regime,
    equal_prior_closed_pe,
    gaussian_fc_threshold,
    one_sensor_pe,
    pe_for_fc_threshold,
    q_function,
    sensor_rates,
    two_level_fc_pe,
    udd_energy,
)


def numeric_lrt_pe(pf, pd, m0, m1, pi1, sigma_c):
    """Oracle: Bayes error by adaptive integration of min(pi0 f0, pi1 f1)."""
    pi0 = 1.0 - pi1
    c = 1.0 / (math.sqrt(2 * math.pi) * sigma_c)

    def f0(z):
        return c * ((1 - pf) * math.exp(-0.5 * ((z - m0) / sigma_c) ** 2)
                    + pf * math.exp(-0.5 * ((z - m1) / sigma_c) ** 2))

    def f1(z):
        return c * ((1 - pd) * math.exp(-0.5 * ((z - m0) / sigma_c) ** 2)
                    + pd * math.exp(-0.5 * ((z - m1) / sigma_c) ** 2))

    lo = min(m0, m1) - 12 * sigma_c
    hi = max(m0, m1) + 12 * sigma_c
    val, _ = sci_integrate.quad(lambda z: min(pi0 * f0(z), pi1 * f1(z)), lo, hi,
                                limit=400, epsabs=1e-13)
    return val


class TestClassifyRegime:
    def test_always_h0(self):
        reg = classify_fc_regime(RatePair(pf=0.2, pd=0.8), eta=4.0)
        assert reg.kind == REGIME_ALWAYS_H0

    def test_equal_priors_give_unit_threshold(self):
        reg = classify_fc_regime(RatePair(pf=0.3, pd=0.9), eta=1.0)
        assert reg.kind == REGIME_THRESHOLD
        assert reg.lambda_eta == pytest.approx(1.0, abs=1e-15)

    def test_threshold_value(self):
        reg = classify_fc_regime(RatePair(pf=0.2, pd=0.8), eta=2.0)
        assert reg.lambda_eta == pytest.approx(3.5, abs=1e-12)

    def test_boundary_equality_decides_h0(self):
        reg = classify_fc_regime(RatePair(pf=0.25, pd=1.0), eta=4.0)
        assert reg.kind == REGIME_ALWAYS_H0

    def test_always_h1_condition_uses_miss_ratio(self):
        # with pf=0.2, pd=0.8 the always-H1 region is eta <= 0.25, not eta <= 4;
        # eta=0.3 must therefore stay a threshold test
        assert classify_fc_regime(RatePair(pf=0.2, pd=0.8), eta=0.25).kind == REGIME_ALWAYS_H1
        reg = classify_fc_regime(RatePair(pf=0.2, pd=0.8), eta=0.3)
        assert reg.kind == REGIME_THRESHOLD
        pi1 = 1.0 / 1.3  # eta = 0.3
        pe = two_level_fc_pe(0.2, 0.8, -1.0, 1.0, Prior.from_pi1(pi1), 1.0).pe
        assert pe < (1.0 - pi1) - 1e-4  # strictly better than always deciding H1
        assert pe == pytest.approx(numeric_lrt_pe(0.2, 0.8, -1.0, 1.0, pi1, 1.0), abs=1e-9)

    def test_degenerate_rates_raise(self):
        with pytest.raises(DegenerateRatesError):
            classify_fc_regime(RatePair(pf=0.4, pd=0.4), eta=1.0)

    def test_unsorted_rates_rejected(self):
        with pytest.raises(ValueError):
            classify_fc_regime(RatePair(pf=0.8, pd=0.2), eta=1.0)


class TestGaussianFcThreshold:
    def test_unit_ratio_gives_midpoint(self):
        rule = SensorRule(t=0.0, m0=-2.0, m1=0.5)
        assert gaussian_fc_threshold(rule, 1.0, 1.3) == pytest.approx(-0.75, abs=1e-15)

    def test_log_term(self):
        rule = SensorRule(t=0.0, m0=-1.0, m1=1.0)
        assert gaussian_fc_threshold(rule, math.e, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_vanishing_noise_goes_to_midpoint(self):
        rule = SensorRule(t=0.0, m0=-1.0, m1=3.0)
        assert gaussian_fc_threshold(rule, math.e, 1e-8) == pytest.approx(1.0, abs=1e-12)


class TestOneSensorPe:
    def test_uninformative_sensor_prior_decision(self):
        p = Prior.from_pi1(0.3)
        s = SensingModel(mu=1.0, sigma_s=1.0)
        rule = SensorRule(t=math.inf, m0=-1.0, m1=1.0)
        res = one_sensor_pe(rule, p, s, 1.0)
        assert res.pe == pytest.approx(0.3, abs=1e-15)

    def test_clean_channel_limit(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        level = math.sqrt(udd_energy(s))
        rule = SensorRule(t=0.0, m0=-level, m1=level)
        res = one_sensor_pe(rule, p, s, 1e-3)
        assert res.pe == pytest.approx(q_function(1.0 / 1.5), abs=1e-9)
        assert res.pe == pytest.approx(0.2525, abs=1e-4)

    def test_noisy_channel_limit(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        level = math.sqrt(udd_energy(s))
        rule = SensorRule(t=0.0, m0=-level, m1=level)
        assert one_sensor_pe(rule, p, s, 1e6).pe == pytest.approx(0.5, abs=1e-5)

    def test_eval_result_identity(self):
        rng = np.random.default_rng(7)
        s = SensingModel(mu=1.0, sigma_s=1.4)
        for _ in range(300):
            p = Prior.from_pi1(float(rng.uniform(0.05, 0.95)))
            rule = SensorRule(t=float(rng.uniform(-4, 4)),
                              m0=float(rng.uniform(-3, 3)),
                              m1=float(rng.uniform(3.001, 5)))
            res = one_sensor_pe(rule, p, s, float(rng.uniform(0.2, 3)))
            assert res.pe == pytest.approx(
                p.pi1 + p.pi0 * res.p_f_sys - p.pi1 * res.p_d_sys, abs=1e-12)

    def test_regime_consistency_random(self):
        # degenerate regimes return the corresponding prior mass exactly
        rng = np.random.default_rng(13)
        hits = {REGIME_ALWAYS_H0: 0, REGIME_ALWAYS_H1: 0}
        for _ in range(1000):
            pf = float(rng.uniform(0.0, 0.9))
            pd = float(rng.uniform(pf + 1e-6, 1.0))
            p = Prior.from_pi1(float(rng.uniform(0.05, 0.95)))
            res = two_level_fc_pe(pf, pd, -1.0, 1.0, p, 1.0)
            if res.regime.kind == REGIME_ALWAYS_H0:
                assert res.pe == p.pi1
                hits[REGIME_ALWAYS_H0] += 1
            elif res.regime.kind == REGIME_ALWAYS_H1:
                assert res.pe == p.pi0
                hits[REGIME_ALWAYS_H1] += 1
        assert hits[REGIME_ALWAYS_H0] > 0 and hits[REGIME_ALWAYS_H1] > 0

    def test_level_relabeling_equivalence(self):
        # swapping the level labels (and complementing rates) is the same rule
        p = Prior.from_pi1(0.35)
        a = two_level_fc_pe(0.3, 0.85, -1.2, 0.8, p, 0.9)
        b = two_level_fc_pe(0.7, 0.15, 0.8, -1.2, p, 0.9)
        assert b.regime.relabeled
        assert a.pe == pytest.approx(b.pe, abs=1e-15)
        assert a.pe == pytest.approx(numeric_lrt_pe(0.3, 0.85, -1.2, 0.8, 0.35, 0.9), abs=1e-9)

    def test_descending_levels_orientation(self):
        # m1 < m0 flips the decision direction; the numeric oracle referees
        p = Prior.from_pi1(0.6)
        res = two_level_fc_pe(0.25, 0.8, 1.5, -0.7, p, 1.1)
        assert res.regime.decide_above is False
        assert res.pe == pytest.approx(numeric_lrt_pe(0.25, 0.8, 1.5, -0.7, 0.6, 1.1), abs=1e-9)

    def test_fc_threshold_local_optimality(self):
        rng = np.random.default_rng(23)
        s = SensingModel(mu=1.0, sigma_s=1.2)
        tested = 0
        while tested < 50:
            p = Prior.from_pi1(float(rng.uniform(0.2, 0.8)))
            rule = SensorRule(t=float(rng.uniform(-1.5, 1.5)),
                              m0=float(rng.uniform(-3, 0)),
                              m1=float(rng.uniform(0.5, 3)))
            sigma_c = float(rng.uniform(0.4, 2.0))
            res = one_sensor_pe(rule, p, s, sigma_c)
            if res.regime.kind != REGIME_THRESHOLD:
                continue
            for delta in (1e-3, 1e-2, -1e-3, -1e-2):
                perturbed = pe_for_fc_threshold(rule, p, s, sigma_c,
                                                res.regime.t_z + delta,
                                                res.regime.decide_above)
                assert perturbed >= res.pe - 1e-12
            tested += 1

    def test_monotone_in_channel_noise(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        level = math.sqrt(udd_energy(s))
        rule = SensorRule(t=0.0, m0=-level, m1=level)
        pes = [one_sensor_pe(rule, p, s, sc).pe for sc in np.linspace(0.05, 5, 60)]
        assert np.all(np.diff(pes) >= -1e-14)


class TestEqualPriorClosedForm:
    def test_matches_generic_evaluator(self):
        p = Prior.from_pi1(0.5)
        for sigma_s in np.linspace(0.4, 2.5, 8):
            s = SensingModel(mu=1.0, sigma_s=float(sigma_s))
            level = math.sqrt(udd_energy(s))
            rule = SensorRule(t=0.0, m0=-level, m1=level)
            for sigma_c in np.linspace(0.2, 4.0, 8):
                assert one_sensor_pe(rule, p, s, float(sigma_c)).pe == pytest.approx(
                    equal_prior_closed_pe(s, float(sigma_c)), abs=1e-10)

    def test_perfect_sensing_limit(self):
        s = SensingModel(mu=1.0, sigma_s=1e-7)
        assert equal_prior_closed_pe(s, 0.8) == pytest.approx(q_function(1.0 / 0.8), abs=1e-9)

    def test_noisy_channel_limit(self):
        s = SensingModel(mu=1.0, sigma_s=1.5)
        assert equal_prior_closed_pe(s, 1e7) == pytest.approx(0.5, abs=1e-6)

    def test_reference_value(self):
        s = SensingModel(mu=1.0, sigma_s=1.5)
        a = q_function(math.sqrt(3.25))
        b = q_function(1.0 / 1.5)
        assert equal_prior_closed_pe(s, 1.0) == pytest.approx(a + b - 2 * a * b, abs=1e-15)
        assert equal_prior_closed_pe(s, 1.0) == pytest.approx(0.2701703763, abs=1e-9)


class TestCddOneSensor:
    def test_channel_blind_threshold_equal_priors(self):
        assert channel_blind_threshold(Prior.from_pi1(0.5), SensingModel(1.0, 1.5)) == 0.0

    def test_channel_blind_threshold_value(self):
        t = channel_blind_threshold(Prior.from_pi1(0.7), SensingModel(1.0, 1.5))
        assert t == pytest.approx(1.125 * math.log(3.0 / 7.0), rel=1e-12)
        assert t == pytest.approx(-0.95321, abs=1e-4)

    def test_searched_never_worse(self):
        for pi1 in (0.5, 0.7):
            p = Prior.from_pi1(pi1)
            for sigma_s in (0.8, 1.5):
                s = SensingModel(mu=1.0, sigma_s=sigma_s)
                for sigma_c in (0.5, 1.5, 3.0):
                    blind = cdd_one_sensor_pe(p, s, sigma_c, "channel_blind").pe
                    searched = cdd_one_sensor_pe(p, s, sigma_c, "searched").pe
                    assert searched <= blind + 1e-12

    def test_searched_matches_blind_for_one_sensor(self):
        # the channel-blind threshold is optimal for a single coded sensor
        p = Prior.from_pi1(0.7)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        for sigma_c in (0.5, 1.5, 3.0):
            blind = cdd_one_sensor_pe(p, s, sigma_c, "channel_blind").pe
            searched = cdd_one_sensor_pe(p, s, sigma_c, "searched").pe
            assert searched == pytest.approx(blind, abs=1e-9)
