"""Fast cross-module invariant checks behind the ``validate`` CLI command.

Each check re-states one of the library's structural guarantees (symmetry,
normalization, consistency between independent evaluation routes) at a
budget of at most a few seconds, and reports pass/fail. The pytest suite
covers the same ground more thoroughly; this module exists so a deployed
installation can be sanity-checked without the test tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import (
    CorrelatedChannel,
    McConfig,
    Mixture1D,
    Mixture2D,
    OptimProblem,
    Prior,
    IndependentChannel,
    SensingModel,
    SensorRule,
    SystemSpec,
    chernoff_gaussian,
    chernoff_mixture_half,
    equal_prior_closed_pe,
    fc_density_correlated,
    integrate_1d,
    lrt_bayes_error_1d,
    lrt_bayes_error_2d,
    lrt_bayes_error_2d_slices,
    mixture_pdf_1d,
    mixture_pdf_2d,
    one_sensor_pe,
    optimize_cdd,
    optimize_qdd,
    q_function,
    qdd_energy,
    sensor_rates,
    simulate_pe,
    solve_m1_under_power,
    two_level_fc_pe,
    two_sensor_pe_independent,
    udd_energy,
    udd_pe_independent,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_rule(rng, s: SensingModel, p: Prior) -> SensorRule:
    for _ in range(100):
        t = rng.uniform(-2.0 * s.sigma_s, 2.0 * s.sigma_s)
        p_m0, p_m1 = (1.0, 1.0)
        rates = sensor_rates(t, s)
        p_m1 = p.pi0 * rates.pf + p.pi1 * rates.pd
        p_m0 = 1.0 - p_m1
        if min(p_m0, p_m1) < 1e-3:
            continue
        box = math.sqrt(udd_energy(s) / p_m0)
        m0 = rng.uniform(-0.95 * box, 0.95 * box)
        sign = 1 if rng.random() < 0.5 else -1
        m1 = solve_m1_under_power(m0, t, s, p, sign=sign)
        if abs(m1 - m0) > 1e-3:
            return SensorRule(t=t, m0=m0, m1=m1)
    raise RuntimeError("could not draw a non-degenerate rule")


def check_q_symmetry() -> CheckResult:
    u = np.linspace(-8, 8, 1001)
    err = np.max(np.abs(q_function(u) + q_function(-u) - 1.0))
    return CheckResult("q_function symmetry", err <= 1e-12, f"max |Q(u)+Q(-u)-1| = {err:.2e}")


def check_mixture_normalization() -> CheckResult:
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(5):
        n = rng.integers(1, 4)
        w = rng.random(n) + 0.05
        w = w / w.sum()
        comps = tuple((float(wi), float(rng.uniform(-3, 3)), float(rng.uniform(0.2, 2.5)))
                      for wi in w)
        m = Mixture1D(components=comps)
        lo, hi = m.support_hull(span=10.0)
        total = integrate_1d(lambda z: mixture_pdf_1d(m, z), lo, hi, tol=1e-12)
        worst = max(worst, abs(total - 1.0))
    return CheckResult("1-D mixture normalization", worst <= 1e-8, f"max |int - 1| = {worst:.2e}")


def check_2d_factorization() -> CheckResult:
    rng = np.random.default_rng(1)
    mix = Mixture2D(components=((0.4, -1.0, 0.5), (0.6, 1.2, -0.8)),
                    sigma1=0.9, sigma2=1.4, rho=0.0)
    mx = Mixture1D(components=((0.4, -1.0, 0.9), (0.6, 1.2, 0.9)))
    # conditional on the component, axes factor when rho = 0; check pointwise
    worst = 0.0
    for _ in range(200):
        z1 = rng.uniform(-4, 4)
        z2 = rng.uniform(-4, 4)
        direct = mixture_pdf_2d(mix, z1, z2)
        manual = sum(w * mixture_pdf_1d(Mixture1D(components=((1.0, a, 0.9),)), z1)
                     * mixture_pdf_1d(Mixture1D(components=((1.0, b, 1.4),)), z2)
                     for (w, a, b) in mix.components)
        worst = max(worst, abs(direct - manual) / max(manual, 1e-300))
    _ = mx
    return CheckResult("rho=0 pointwise factorization", worst <= 1e-10,
                       f"max rel err = {worst:.2e}")


def check_power_roundtrip() -> CheckResult:
    rng = np.random.default_rng(2)
    p = Prior.from_pi1(0.6)
    s = SensingModel(mu=1.0, sigma_s=1.3)
    e_u = udd_energy(s)
    worst = 0.0
    for _ in range(200):
        rule = _random_rule(rng, s, p)
        e_q = qdd_energy(rule, sensor_rates(rule.t, s), p)
        worst = max(worst, abs(e_q - e_u) / e_u)
    return CheckResult("power constraint round-trip", worst <= 1e-10,
                       f"max rel energy err = {worst:.2e}")


def check_regime_vs_numeric() -> CheckResult:
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        pf = rng.uniform(0.0, 0.93)
        pd = rng.uniform(pf + 0.02, 1.0)
        pi1 = rng.uniform(0.15, 0.85)
        m0 = rng.uniform(-3, 1)
        m1 = rng.uniform(m0 + 0.3, 4)
        sc = rng.uniform(0.4, 2.5)
        p = Prior.from_pi1(pi1)
        res = two_level_fc_pe(pf, pd, m0, m1, p, sc)
        f0 = Mixture1D(components=((1 - pf, m0, sc), (pf, m1, sc)))
        f1 = Mixture1D(components=((1 - pd, m0, sc), (pd, m1, sc)))
        worst = max(worst, abs(res.pe - lrt_bayes_error_1d(f1, f0, p, tol=1e-11)))
    return CheckResult("fusion regime vs numeric LRT", worst <= 1e-8,
                       f"max |closed - numeric| = {worst:.2e}")


def check_equal_prior_closed_form() -> CheckResult:
    p = Prior.from_pi1(0.5)
    worst = 0.0
    for ss in (0.5, 1.0, 1.5, 2.2):
        for sc in (0.3, 0.8, 1.5, 3.0):
            s = SensingModel(mu=1.0, sigma_s=ss)
            level = math.sqrt(udd_energy(s))
            rule = SensorRule(t=0.0, m0=-level, m1=level)
            worst = max(worst, abs(one_sensor_pe(rule, p, s, sc).pe
                                   - equal_prior_closed_pe(s, sc)))
    return CheckResult("equal-prior closed form", worst <= 1e-10,
                       f"max diff = {worst:.2e}")


def check_reduction_consistency() -> CheckResult:
    from .fusion_multi import default_grid_2d

    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(5):
        p = Prior.from_pi1(rng.uniform(0.3, 0.7))
        s = SensingModel(mu=1.0, sigma_s=rng.uniform(0.8, 1.6))
        sc = rng.uniform(0.6, 2.0)
        rule_a = _random_rule(rng, s, p)
        rule_b = _random_rule(rng, s, p)
        spec = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                          channel=IndependentChannel(sigma_c=(sc, sc)))
        pe_red = two_sensor_pe_independent(spec)
        spec_c = SystemSpec(prior=p, sensors=((s, rule_a), (s, rule_b)),
                            channel=CorrelatedChannel(rho=0.0, sigma_c1=sc, sigma_c2=sc))
        f0, f1 = fc_density_correlated(spec_c)
        grid = default_grid_2d(f1, f0, n=2401)
        worst = max(worst, abs(pe_red - lrt_bayes_error_2d(f1, f0, p, grid=grid)))
    return CheckResult("2-sensor reduction vs grid", worst <= 1e-6,
                       f"max diff = {worst:.2e}")


def check_slices_vs_grid_correlated() -> CheckResult:
    p = Prior.from_pi1(0.5)
    s = SensingModel(mu=1.0, sigma_s=1.5)
    level = math.sqrt(udd_energy(s))
    rule = SensorRule(t=0.2, m0=-0.8 * level, m1=1.1 * level)
    worst = 0.0
    for rho in (0.5, 0.9, -0.4):
        spec = SystemSpec(prior=p, sensors=((s, rule), (s, rule)),
                          channel=CorrelatedChannel(rho=rho, sigma_c1=1.2, sigma_c2=1.2))
        f0, f1 = fc_density_correlated(spec)
        worst = max(worst, abs(lrt_bayes_error_2d_slices(f1, f0, p)
                               - lrt_bayes_error_2d(f1, f0, p)))
    return CheckResult("correlated slices vs grid", worst <= 1e-5,
                       f"max diff = {worst:.2e}")


def check_dominance_chain() -> CheckResult:
    p = Prior.from_pi1(0.7)
    s = SensingModel(mu=1.0, sigma_s=1.5)
    problem = OptimProblem(prior=p, sensors=(s,), channel=IndependentChannel(sigma_c=(1.2,)))
    q = optimize_qdd(problem, starts=8, seed=0)
    c = optimize_cdd(problem, starts=8, seed=0)
    ok = q.pe <= c.pe + 1e-6
    return CheckResult("dominance QDD <= CDD", ok, f"qdd={q.pe:.8f} cdd={c.pe:.8f}")


def check_chernoff_gaussian_agreement() -> CheckResult:
    worst = 0.0
    for mu in (0.5, 1.0, 2.0):
        for sc in (0.4, 1.0, 2.0):
            f1 = Mixture1D(components=((1.0, mu, sc),))
            f0 = Mixture1D(components=((1.0, -mu, sc),))
            worst = max(worst, abs(chernoff_mixture_half(f1, f0) - chernoff_gaussian(mu, sc)))
    return CheckResult("Chernoff mixture vs Gaussian closed form", worst <= 1e-8,
                       f"max diff = {worst:.2e}")


def check_exponent_limit() -> CheckResult:
    p = Prior.from_pi1(0.5)
    s = SensingModel(mu=1.0, sigma_s=1.0)
    sc = 1.0
    c_u = chernoff_gaussian(s.mu, math.hypot(s.sigma_s, sc))
    rel_errs = []
    for n in (4, 16, 64):
        pe = udd_pe_independent(n, p, s, sc)
        rel_errs.append(abs(-math.log(pe) / n - c_u) / c_u)
    ok = rel_errs[0] > rel_errs[1] > rel_errs[2]
    return CheckResult("error exponent approaches Chernoff rate", ok,
                       "rel errs " + ", ".join(f"{e:.3f}" for e in rel_errs))


def check_mc_reproducibility() -> CheckResult:
    p = Prior.from_pi1(0.5)
    s = SensingModel(mu=1.0, sigma_s=1.5)
    spec = SystemSpec.iid(p, s, None, 1, 1.0)
    cfg = McConfig(trials=50_000, seed=7, system=spec)
    e1 = simulate_pe(cfg)
    e2 = simulate_pe(cfg)
    analytic = udd_pe_independent(1, p, s, 1.0)
    ok = (e1.pe_hat == e2.pe_hat) and abs(e1.pe_hat - analytic) <= 4 * e1.stderr
    return CheckResult("Monte Carlo reproducibility and accuracy", ok,
                       f"pe_hat={e1.pe_hat:.5f} analytic={analytic:.5f}")


ALL_CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_q_symmetry,
    check_mixture_normalization,
    check_2d_factorization,
    check_power_roundtrip,
    check_regime_vs_numeric,
    check_equal_prior_closed_form,
    check_reduction_consistency,
    check_slices_vs_grid_correlated,
    check_dominance_chain,
    check_chernoff_gaussian_agreement,
    check_exponent_limit,
    check_mc_reproducibility,
)


def run_all() -> list[CheckResult]:
    results = []
    for check in ALL_CHECKS:
        try:
            results.append(check())
        except Exception as exc:  # a crashed check is a failed check
            results.append(CheckResult(check.__name__, False, f"raised {exc!r}"))
    return results
