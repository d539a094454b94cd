"""Tests for multi-sensor fusion densities and Bayes-error evaluators."""

import math

import numpy as np
import pytest

from detbench import (
    CorrelatedChannel,
    GridCoverageError,
    Grid2D,
    IndependentChannel,
    Mixture2D,
    Prior,
    SensingModel,
    SensorRule,
    SystemSpec,
    default_grid_2d,
    fc_density_correlated,
    fc_density_independent,
    lrt_bayes_error_1d,
    lrt_bayes_error_2d,
    lrt_bayes_error_2d_slices,
    mixture_pdf_1d,
    mixture_pdf_2d,
    one_sensor_pe,
    q_function,
    sensor_rates,
    solve_m1_under_power,
    transmit_probs,
    two_sensor_pe_independent,
    udd_energy,
    udd_pe_correlated,
    udd_pe_independent,
)


def draw_feasible_rule(rng, s, p, min_gap=1e-2):
    while True:
        t = float(rng.uniform(-2 * s.sigma_s, 2 * s.sigma_s))
        p0, p1 = transmit_probs(sensor_rates(t, s), p)
        if min(p0, p1) < 1e-3:
            continue
        box = math.sqrt(udd_energy(s) / p0)
        m0 = float(rng.uniform(-0.95 * box, 0.95 * box))
        m1 = solve_m1_under_power(m0, t, s, p, sign=1 if rng.random() < 0.5 else -1)
        if abs(m1 - m0) > min_gap:
            return SensorRule(t=t, m0=m0, m1=m1)


class TestUddIndependent:
    def test_single_sensor_reference(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=math.sqrt(2.0))
        pe = udd_pe_independent(1, p, s, math.sqrt(2.0))
        assert pe == pytest.approx(q_function(0.5), abs=1e-14)
        assert pe == pytest.approx(0.308538, abs=1e-6)

    def test_two_sensor_equal_priors(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.2)
        sigma = math.hypot(1.2, 0.9)
        assert udd_pe_independent(2, p, s, 0.9) == pytest.approx(
            q_function(math.sqrt(2.0) * 1.0 / sigma), abs=1e-14)

    def test_error_vanishes_with_many_sensors(self):
        p = Prior.from_pi1(0.4)
        s = SensingModel(mu=1.0, sigma_s=1.0)
        pes = [udd_pe_independent(n, p, s, 1.0) for n in (1, 4, 16, 64, 256)]
        assert all(a > b for a, b in zip(pes, pes[1:]))
        assert pes[-1] < 1e-12


class TestUddCorrelated:
    def test_independent_reduction(self):
        p = Prior.from_pi1(0.6)
        s = SensingModel(mu=1.0, sigma_s=1.4)
        ch = CorrelatedChannel(rho=0.0, sigma_c1=1.1, sigma_c2=1.1)
        assert udd_pe_correlated(p, s, s, ch) == pytest.approx(
            udd_pe_independent(2, p, s, 1.1), abs=1e-12)

    def test_high_correlation_approaches_one_sensor(self):
        # with the channel noise dominant, full correlation removes the
        # second look at the channel and the error climbs to the 1-sensor one
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=0.3)
        ch = CorrelatedChannel(rho=0.999, sigma_c1=3.0, sigma_c2=3.0)
        pe2 = udd_pe_correlated(p, s, s, ch, cross_check=False)
        pe1 = udd_pe_independent(1, p, s, 3.0)
        assert pe2 == pytest.approx(pe1, rel=0.02)
        assert pe2 < pe1  # the sensing-noise average still helps a little

    def test_monotone_degradation_in_rho(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        pes = [udd_pe_correlated(p, s, s, CorrelatedChannel(rho=r, sigma_c1=1.5, sigma_c2=1.5),
                                 cross_check=False)
               for r in (0.0, 0.3, 0.6, 0.9, 0.99)]
        assert all(a < b for a, b in zip(pes, pes[1:]))

    def test_closed_form_vs_numeric_lrt(self):
        p = Prior.from_pi1(0.5)
        s1 = SensingModel(mu=1.0, sigma_s=1.2)
        s2 = SensingModel(mu=1.0, sigma_s=1.6)
        ch = CorrelatedChannel(rho=0.7, sigma_c1=0.9, sigma_c2=1.3)
        # cross_check=True runs the 2-D numeric route internally and raises
        # on disagreement beyond 5e-5; a tight manual check on top:
        pe = udd_pe_correlated(p, s1, s2, ch, cross_check=True)
        sig1 = math.hypot(1.2, 0.9)
        sig2 = math.hypot(1.6, 1.3)
        rho_hat = 0.7 * 0.9 * 1.3 / (sig1 * sig2)
        f0 = Mixture2D(components=((1.0, -1.0, -1.0),), sigma1=sig1, sigma2=sig2, rho=rho_hat)
        f1 = Mixture2D(components=((1.0, 1.0, 1.0),), sigma1=sig1, sigma2=sig2, rho=rho_hat)
        assert pe == pytest.approx(lrt_bayes_error_2d(f1, f0, p), abs=1e-6)


class TestFcDensities:
    def test_independent_structure(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.0)
        rule = SensorRule(t=0.3, m0=-1.0, m1=1.0)
        spec = SystemSpec.iid(p, s, rule, 1, 0.8)
        (f0, f1), = fc_density_independent(spec)
        r = sensor_rates(0.3, s)
        assert f0.components == ((1.0 - r.pf, -1.0, 0.8), (r.pf, 1.0, 0.8))
        assert f1.components == ((1.0 - r.pd, -1.0, 0.8), (r.pd, 1.0, 0.8))

    def test_mirror_symmetry_at_zero_threshold(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.3)
        rule = SensorRule(t=0.0, m0=-1.7, m1=1.7)
        spec = SystemSpec.iid(p, s, rule, 1, 1.0)
        (f0, f1), = fc_density_independent(spec)
        z = np.linspace(-6, 6, 101)
        assert np.allclose(mixture_pdf_1d(f0, z), mixture_pdf_1d(f1, -z), atol=1e-14)

    def test_raw_forwarding_marginal(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.2)
        spec = SystemSpec.iid(p, s, None, 1, 0.9)
        (f0, f1), = fc_density_independent(spec)
        sig = math.hypot(1.2, 0.9)
        # the H0 marginal is a pure Gaussian at -mu with the combined variance
        assert mixture_pdf_1d(f0, -1.0) == pytest.approx(1 / (math.sqrt(2 * math.pi) * sig), rel=1e-12)
        assert mixture_pdf_1d(f1, 1.0) == pytest.approx(1 / (math.sqrt(2 * math.pi) * sig), rel=1e-12)

    def test_correlated_weights_product_rule(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.0)
        # both sensors at the operating point (pf, pd) = (0.2, 0.8)
        t = 0.0
        r = sensor_rates(t, SensingModel(mu=0.8416212335729143, sigma_s=1.0))
        assert r.pf == pytest.approx(0.2, abs=1e-12)
        sA = SensingModel(mu=0.8416212335729143, sigma_s=1.0)
        rule = SensorRule(t=t, m0=-1.0, m1=1.0)
        spec = SystemSpec(prior=p, sensors=((sA, rule), (sA, rule)),
                          channel=CorrelatedChannel(rho=0.5, sigma_c1=1.0, sigma_c2=1.0))
        f0, f1 = fc_density_correlated(spec)
        w1 = sorted(c[0] for c in f1.components)
        assert w1 == pytest.approx([0.04, 0.16, 0.16, 0.64], abs=1e-12)

    def test_pure_h0_component_for_raw_sensors(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.2)
        spec = SystemSpec(prior=p, sensors=((s, None), (s, None)),
                          channel=CorrelatedChannel(rho=0.4, sigma_c1=1.0, sigma_c2=1.0))
        f0, _ = fc_density_correlated(spec)
        live = [(w, a, b) for w, a, b in f0.components if w > 0]
        assert live == [(1.0, -1.0, -1.0)]

    def test_rho_zero_factorizes_pointwise(self):
        rng = np.random.default_rng(31)
        p = Prior.from_pi1(0.4)
        s = SensingModel(mu=1.0, sigma_s=1.1)
        rule_a = SensorRule(t=0.4, m0=-1.2, m1=1.9)
        rule_b = SensorRule(t=-0.2, m0=-2.0, m1=0.7)
        spec_c = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                            channel=CorrelatedChannel(rho=0.0, sigma_c1=0.8, sigma_c2=1.4))
        spec_i = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                            channel=IndependentChannel(sigma_c=(0.8, 1.4)))
        f0c, f1c = fc_density_correlated(spec_c)
        (f0a, f1a), (f0b, f1b) = fc_density_independent(spec_i)
        for _ in range(1000):
            z1 = float(rng.uniform(-5, 5))
            z2 = float(rng.uniform(-5, 5))
            assert mixture_pdf_2d(f0c, z1, z2) == pytest.approx(
                mixture_pdf_1d(f0a, z1) * mixture_pdf_1d(f0b, z2), rel=1e-10)
            assert mixture_pdf_2d(f1c, z1, z2) == pytest.approx(
                mixture_pdf_1d(f1a, z1) * mixture_pdf_1d(f1b, z2), rel=1e-10)


class TestLrtBayesError2D:
    def test_identical_densities(self):
        p = Prior.from_pi1(0.3)
        f = Mixture2D(components=((1.0, 0.5, -0.5),), sigma1=1.0, sigma2=1.0, rho=0.2)
        assert lrt_bayes_error_2d(f, f, p) == pytest.approx(0.3, abs=1e-9)

    def test_symmetric_gaussians_mahalanobis(self):
        p = Prior.from_pi1(0.5)
        sig1, sig2, rho = 1.1, 0.9, 0.5
        mu = np.array([0.8, 1.1])
        f0 = Mixture2D(components=((1.0, -mu[0], -mu[1]),), sigma1=sig1, sigma2=sig2, rho=rho)
        f1 = Mixture2D(components=((1.0, mu[0], mu[1]),), sigma1=sig1, sigma2=sig2, rho=rho)
        cov = np.array([[sig1**2, rho * sig1 * sig2], [rho * sig1 * sig2, sig2**2]])
        d2 = float((2 * mu) @ np.linalg.solve(cov, 2 * mu))
        assert lrt_bayes_error_2d(f1, f0, p) == pytest.approx(
            q_function(math.sqrt(d2) / 2.0), abs=1e-7)

    def test_far_separation(self):
        p = Prior.from_pi1(0.5)
        f0 = Mixture2D(components=((1.0, -8.0, -8.0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        f1 = Mixture2D(components=((1.0, 8.0, 8.0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        assert lrt_bayes_error_2d(f1, f0, p) <= 1e-6

    def test_grid_coverage_error(self):
        p = Prior.from_pi1(0.5)
        f0 = Mixture2D(components=((1.0, -1.0, 0.0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        f1 = Mixture2D(components=((1.0, 5.0, 0.0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        grid = Grid2D(x_lo=-3, x_hi=3, nx=101, y_lo=-3, y_hi=3, ny=101)
        with pytest.raises(GridCoverageError):
            lrt_bayes_error_2d(f1, f0, p, grid=grid)


class TestTwoSensorReduction:
    def test_uninformative_second_sensor(self):
        p = Prior.from_pi1(0.65)
        s = SensingModel(mu=1.0, sigma_s=1.1)
        rule_a = SensorRule(t=0.2, m0=-1.5, m1=1.5)
        dead = SensorRule(t=math.inf, m0=-1.0, m1=1.0)
        spec = SystemSpec(prior=p, sensors=((s, rule_a), (s, dead)),
                          channel=IndependentChannel(sigma_c=(1.0, 1.0)))
        assert two_sensor_pe_independent(spec) == pytest.approx(
            one_sensor_pe(rule_a, p, s, 1.0).pe, abs=1e-12)

    def test_sensor_swap_symmetry(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        level = math.sqrt(udd_energy(s))
        rule = SensorRule(t=0.0, m0=-level, m1=level)
        rule_b = SensorRule(t=0.5, m0=-1.2, m1=2.1)
        spec_ab = SystemSpec(prior=p, sensors=((s, rule), (s, rule_b)),
                             channel=IndependentChannel(sigma_c=(0.9, 1.3)))
        spec_ba = SystemSpec(prior=p, sensors=((s, rule_b), (s, rule)),
                             channel=IndependentChannel(sigma_c=(1.3, 0.9)))
        assert two_sensor_pe_independent(spec_ab) == pytest.approx(
            two_sensor_pe_independent(spec_ba), abs=1e-9)

    def test_reduction_matches_grid_on_random_configs(self):
        # the named consistency contract: 50 random systems, 1e-6 agreement
        # (the grid is densified beyond its default so that its own
        # decision-boundary kink error stays well inside the tolerance)
        rng = np.random.default_rng(41)
        for _ in range(50):
            p = Prior.from_pi1(float(rng.uniform(0.25, 0.75)))
            s = SensingModel(mu=1.0, sigma_s=float(rng.uniform(0.7, 1.8)))
            sc = float(rng.uniform(0.4, 2.5))
            rule_a = draw_feasible_rule(rng, s, p)
            rule_b = draw_feasible_rule(rng, s, p)
            spec = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                              channel=IndependentChannel(sigma_c=(sc, sc)))
            pe_red = two_sensor_pe_independent(spec)
            spec_c = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                                channel=CorrelatedChannel(rho=0.0, sigma_c1=sc, sigma_c2=sc))
            f0, f1 = fc_density_correlated(spec_c)
            grid = default_grid_2d(f1, f0, n=2401)
            assert pe_red == pytest.approx(lrt_bayes_error_2d(f1, f0, p, grid=grid), abs=1e-6)

    def test_raw_plus_quantized_mixed_system(self):
        # a raw-forwarding sensor is the (0, 1)-rate quantizer; the reduction
        # must agree with the grid route on the mixed system too
        p = Prior.from_pi1(0.45)
        s = SensingModel(mu=1.0, sigma_s=1.2)
        rule = SensorRule(t=0.4, m0=-1.5, m1=1.8)
        spec = SystemSpec(prior=p, sensors=((s, None), (s, rule)),
                          channel=IndependentChannel(sigma_c=(1.0, 1.0)))
        pe_red = two_sensor_pe_independent(spec)
        spec_c = SystemSpec(prior=p, sensors=((s, None), (s, rule)),
                            channel=CorrelatedChannel(rho=0.0, sigma_c1=1.0, sigma_c2=1.0))
        f0, f1 = fc_density_correlated(spec_c)
        assert pe_red == pytest.approx(lrt_bayes_error_2d(f1, f0, p), abs=1e-6)

    def test_pe_bounds(self):
        rng = np.random.default_rng(43)
        for _ in range(25):
            p = Prior.from_pi1(float(rng.uniform(0.2, 0.8)))
            s = SensingModel(mu=1.0, sigma_s=float(rng.uniform(0.8, 1.6)))
            sc = float(rng.uniform(0.3, 2.5))
            spec = SystemSpec(prior=p,
                              sensors=((s, draw_feasible_rule(rng, s, p)),
                                       (s, draw_feasible_rule(rng, s, p))),
                              channel=IndependentChannel(sigma_c=(sc, sc)))
            pe = two_sensor_pe_independent(spec)
            assert 0.0 <= pe <= p.min_error + 1e-6

    def test_data_processing_in_channel_noise(self):
        p = Prior.from_pi1(0.6)
        s = SensingModel(mu=1.0, sigma_s=1.2)
        rule = SensorRule(t=0.3, m0=-1.4, m1=1.6)
        pes = []
        for sc in np.linspace(0.3, 3.0, 12):
            spec = SystemSpec(prior=p, sensors=((s, rule), (s, rule)),
                              channel=IndependentChannel(sigma_c=(float(sc), float(sc))))
            pes.append(two_sensor_pe_independent(spec))
        assert np.all(np.diff(pes) >= -1e-9)


class TestSlicesEvaluator:
    def test_matches_grid_across_correlations(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.5)
        rule_a = SensorRule(t=0.4, m0=-1.2, m1=1.9)
        rule_b = SensorRule(t=-0.3, m0=-0.8, m1=2.1)
        for rho, sc in ((0.9, 1.5), (0.5, 0.7), (-0.6, 2.0), (0.95, 0.3)):
            spec = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                              channel=CorrelatedChannel(rho=rho, sigma_c1=sc, sigma_c2=sc))
            f0, f1 = fc_density_correlated(spec)
            assert lrt_bayes_error_2d_slices(f1, f0, p) == pytest.approx(
                lrt_bayes_error_2d(f1, f0, p), abs=5e-6)

    def test_identical_densities(self):
        p = Prior.from_pi1(0.35)
        f = Mixture2D(components=((0.5, -1.0, 0.0), (0.5, 1.0, 0.5)),
                      sigma1=1.0, sigma2=1.2, rho=0.3)
        assert lrt_bayes_error_2d_slices(f, f, p) == pytest.approx(0.35, abs=1e-9)

    def test_covariance_mismatch_rejected(self):
        p = Prior.from_pi1(0.5)
        f0 = Mixture2D(components=((1.0, 0, 0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        f1 = Mixture2D(components=((1.0, 1, 1),), sigma1=1.0, sigma2=1.0, rho=0.4)
        with pytest.raises(ValueError):
            lrt_bayes_error_2d_slices(f1, f0, p)


class TestLrtBayesError1D:
    def test_against_closed_form(self):
        p = Prior.from_pi1(0.6)
        s = SensingModel(mu=1.0, sigma_s=1.3)
        rule = SensorRule(t=0.2, m0=-1.1, m1=1.6)
        res = one_sensor_pe(rule, p, s, 0.9)
        spec = SystemSpec.iid(p, s, rule, 1, 0.9)
        (f0, f1), = fc_density_independent(spec)
        assert lrt_bayes_error_1d(f1, f0, p, tol=1e-11) == pytest.approx(res.pe, abs=1e-9)


class TestSystemSpecValidation:
    def test_channel_arity(self):
        p = Prior.from_pi1(0.5)
        s = SensingModel(mu=1.0, sigma_s=1.0)
        with pytest.raises(ValueError):
            SystemSpec(prior=p, sensors=((s, None),),
                       channel=IndependentChannel(sigma_c=(1.0, 1.0)))
        with pytest.raises(ValueError):
            SystemSpec(prior=p, sensors=((s, None),),
                       channel=CorrelatedChannel(rho=0.5, sigma_c1=1.0, sigma_c2=1.0))

    def test_default_grid_covers_means(self):
        f0 = Mixture2D(components=((1.0, -2.0, 1.0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        f1 = Mixture2D(components=((1.0, 3.0, -1.0),), sigma1=1.0, sigma2=1.0, rho=0.0)
        g = default_grid_2d(f1, f0)
        assert g.x_lo < -2.0 and g.x_hi > 3.0 and g.y_lo < -1.0 and g.y_hi > 1.0
