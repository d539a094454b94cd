"""Exact single-sensor fusion analytics for two-level reports over AWGN.

The fusion center receives ``Z = Y + W`` with ``W ~ N(0, sigma_c^2)`` and
``Y in {m0, m1}``, so the hypothesis-conditional densities are two-component
Gaussian mixtures whose weights are the sensor operating point (pf, pd). The
optimal fusion test falls into one of three regimes:

* ``always_h0``  -- eta >= pd/pf: no received value can overcome the prior;
* ``always_h1``  -- eta <= (1-pd)/(1-pf): the prior already decides H1;
* ``threshold``  -- otherwise the channel likelihood ratio is compared with
  lambda_eta = 1 + (eta-1)/(pd - eta*pf) > 0, which for Gaussian noise is a
  single cut at t_z = sigma_c^2/(m1-m0) * ln(lambda_eta) + (m0+m1)/2.

With m1 > m0 the fusion center decides H1 for z >= t_z; with m1 < m0 the
inequality flips. Orientations with pd < pf are normalized first by swapping
the level labels (which complements both rates); the normalization is
recorded in the returned regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sciopt

from .numerics import q_function
from .sensor import (
    Prior,
    RatePair,
    SensingModel,
    SensorRule,
    sensor_rates,
    udd_energy,
)

REGIME_ALWAYS_H0 = "always_h0"
REGIME_ALWAYS_H1 = "always_h1"
REGIME_THRESHOLD = "threshold"

MODE_CHANNEL_BLIND = "channel_blind"
MODE_SEARCHED = "searched"


class DegenerateRatesError(ValueError):
    """pf == pd: the report is independent of the hypothesis and the fusion
    likelihood ratio is identically one."""


@dataclass(frozen=True)
class FcRegime:
    """Fusion-side behavior class, with the Gaussian threshold when it exists.

    ``relabeled`` records that the two transmit levels were swapped to obtain
    pd >= pf before classification; ``decide_above`` is True when H1 is the
    decision for z >= t_z (threshold regime only).
    """

    kind: str
    lambda_eta: float | None = None
    t_z: float | None = None
    relabeled: bool = False
    decide_above: bool | None = None


@dataclass(frozen=True)
class EvalResult:
    """Bayes error with the system-level operating point that produced it."""

    pe: float
    p_f_sys: float
    p_d_sys: float
    regime: FcRegime


def classify_fc_regime(r: RatePair, eta: float) -> FcRegime:
    """Classify the optimal fusion behavior for a pd >= pf operating point.

    Raises DegenerateRatesError when pf == pd and ValueError when pd < pf
    (callers owning arbitrary orientations should normalize first, as
    ``two_level_fc_pe`` does).
    """
    if not (eta > 0.0):
        raise ValueError(f"classify_fc_regime: eta must be positive, got {eta}")
    pf, pd = r.pf, r.pd
    if pf == pd:
        raise DegenerateRatesError("classify_fc_regime: pf == pd, likelihood ratio is constant")
    if pd < pf:
        raise ValueError("classify_fc_regime: requires pd >= pf; relabel the levels first")
    ratio_h0 = pd / pf if pf > 0.0 else math.inf
    ratio_h1 = (1.0 - pd) / (1.0 - pf) if pd < 1.0 else 0.0
    if eta >= ratio_h0:
        return FcRegime(kind=REGIME_ALWAYS_H0)
    if eta <= ratio_h1:
        return FcRegime(kind=REGIME_ALWAYS_H1)
    denom = pd - eta * pf
    if denom <= 0.0:  # rounding right at the always-H0 boundary
        return FcRegime(kind=REGIME_ALWAYS_H0)
    lam = 1.0 + (eta - 1.0) / denom
    if lam <= 0.0:  # rounding right at the always-H1 boundary
        return FcRegime(kind=REGIME_ALWAYS_H1)
    return FcRegime(kind=REGIME_THRESHOLD, lambda_eta=lam)


def gaussian_fc_threshold(rule: SensorRule, lambda_eta: float, sigma_c: float) -> float:
    """Observation-domain fusion threshold for Gaussian reporting noise."""
    if not (lambda_eta > 0.0):
        raise ValueError(f"gaussian_fc_threshold: lambda_eta must be positive, got {lambda_eta}")
    if not (sigma_c > 0.0):
        raise ValueError(f"gaussian_fc_threshold: sigma_c must be positive, got {sigma_c}")
    return sigma_c * sigma_c / (rule.m1 - rule.m0) * math.log(lambda_eta) + 0.5 * (rule.m0 + rule.m1)


def _mixture_tail_probs(pf, pd, m0, m1, sigma_c, t_z, decide_above):
    """System (P_F, P_D) when the decide-H1 region is a half-line at t_z."""
    q0 = q_function((t_z - m0) / sigma_c)
    q1 = q_function((t_z - m1) / sigma_c)
    if decide_above:
        p_f = (1.0 - pf) * q0 + pf * q1
        p_d = (1.0 - pd) * q0 + pd * q1
    else:
        p_f = (1.0 - pf) * (1.0 - q0) + pf * (1.0 - q1)
        p_d = (1.0 - pd) * (1.0 - q0) + pd * (1.0 - q1)
    return p_f, p_d


def two_level_fc_pe(pf: float, pd: float, m0: float, m1: float, p: Prior, sigma_c: float) -> EvalResult:
    """Optimal-fusion Bayes error for an arbitrary two-level report.

    Accepts any orientation of rates and levels (including pd < pf, produced
    for example by interval rules) and normalizes internally. pf == pd is
    resolved as the prior-only decision rather than an error.
    """
    if not (sigma_c > 0.0):
        raise ValueError(f"two_level_fc_pe: sigma_c must be positive, got {sigma_c}")
    eta = p.eta
    if pf == pd:
        decide_h1 = eta <= 1.0  # constant likelihood ratio of one against eta
        if decide_h1:
            return EvalResult(pe=p.pi0, p_f_sys=1.0, p_d_sys=1.0,
                              regime=FcRegime(kind=REGIME_ALWAYS_H1))
        return EvalResult(pe=p.pi1, p_f_sys=0.0, p_d_sys=0.0,
                          regime=FcRegime(kind=REGIME_ALWAYS_H0))

    relabeled = pd < pf
    if relabeled:
        m0, m1 = m1, m0
        pf, pd = 1.0 - pf, 1.0 - pd

    regime = classify_fc_regime(RatePair(pf=pf, pd=pd), eta)
    if regime.kind == REGIME_ALWAYS_H0:
        return EvalResult(pe=p.pi1, p_f_sys=0.0, p_d_sys=0.0,
                          regime=FcRegime(kind=REGIME_ALWAYS_H0, relabeled=relabeled))
    if regime.kind == REGIME_ALWAYS_H1:
        return EvalResult(pe=p.pi0, p_f_sys=1.0, p_d_sys=1.0,
                          regime=FcRegime(kind=REGIME_ALWAYS_H1, relabeled=relabeled))

    lam = regime.lambda_eta
    t_z = sigma_c * sigma_c / (m1 - m0) * math.log(lam) + 0.5 * (m0 + m1)
    decide_above = m1 > m0
    p_f, p_d = _mixture_tail_probs(pf, pd, m0, m1, sigma_c, t_z, decide_above)
    pe = p.pi1 + p.pi0 * p_f - p.pi1 * p_d
    return EvalResult(
        pe=pe, p_f_sys=p_f, p_d_sys=p_d,
        regime=FcRegime(kind=REGIME_THRESHOLD, lambda_eta=lam, t_z=t_z,
                        relabeled=relabeled, decide_above=decide_above),
    )


def pe_for_fc_threshold(rule: SensorRule, p: Prior, s: SensingModel, sigma_c: float,
                        t_z: float, decide_above: bool | None = None) -> float:
    """Bayes error when the fusion center uses a *given* cut instead of the
    optimal one. Exists so threshold optimality can be probed directly."""
    r = sensor_rates(rule.t, s)
    if decide_above is None:
        decide_above = rule.m1 > rule.m0
    p_f, p_d = _mixture_tail_probs(r.pf, r.pd, rule.m0, rule.m1, sigma_c, t_z, decide_above)
    return p.pi1 + p.pi0 * p_f - p.pi1 * p_d


def one_sensor_pe(rule: SensorRule, p: Prior, s: SensingModel, sigma_c: float) -> EvalResult:
    """Exact Bayes error of a one-sensor two-level system over AWGN."""
    r = sensor_rates(rule.t, s)
    return two_level_fc_pe(r.pf, r.pd, rule.m0, rule.m1, p, sigma_c)


def equal_prior_closed_pe(s: SensingModel, sigma_c: float) -> float:
    """Closed-form Bayes error of the equal-prior optimum (t=0, levels
    -+sqrt(E_u)): a + b - 2ab with a = Q(sqrt(E_u)/sigma_c), b = Q(mu/sigma_s)."""
    if not (sigma_c > 0.0):
        raise ValueError(f"equal_prior_closed_pe: sigma_c must be positive, got {sigma_c}")
    a = q_function(math.sqrt(udd_energy(s)) / sigma_c)
    b = q_function(s.mu / s.sigma_s)
    return a + b - 2.0 * a * b


def channel_blind_threshold(p: Prior, s: SensingModel) -> float:
    """Sensor threshold that ignores the channel: (sigma_s^2 / 2 mu) ln eta.

    This is the optimal coded-report (fixed +-sqrt(E_u) level) threshold for
    a single sensor, whatever the channel noise.
    """
    return s.sigma_s * s.sigma_s / (2.0 * s.mu) * math.log(p.eta)


def cdd_one_sensor_pe(p: Prior, s: SensingModel, sigma_c: float,
                      threshold_mode: str = MODE_CHANNEL_BLIND) -> EvalResult:
    """One-sensor coded-report error with levels fixed at -+sqrt(E_u).

    ``channel_blind`` evaluates the closed-form threshold; ``searched``
    minimizes over the sensor threshold numerically (a superset containing
    the channel-blind point, so it can only match or improve it).
    """
    level = math.sqrt(udd_energy(s))

    def rule_at(t: float) -> SensorRule:
        return SensorRule(t=t, m0=-level, m1=level)

    t_cb = channel_blind_threshold(p, s)
    if threshold_mode == MODE_CHANNEL_BLIND:
        return one_sensor_pe(rule_at(t_cb), p, s, sigma_c)
    if threshold_mode != MODE_SEARCHED:
        raise ValueError(f"cdd_one_sensor_pe: unknown threshold_mode {threshold_mode!r}")

    span = s.mu + 6.0 * s.sigma_s
    candidates = np.concatenate([np.linspace(-span, span, 61), [t_cb]])
    pes = np.array([one_sensor_pe(rule_at(t), p, s, sigma_c).pe for t in candidates])
    order = np.argsort(candidates)
    candidates = candidates[order]
    pes = pes[order]
    k = int(np.argmin(pes))
    lo = candidates[max(k - 1, 0)]
    hi = candidates[min(k + 1, len(candidates) - 1)]
    res = _sciopt.minimize_scalar(
        lambda t: one_sensor_pe(rule_at(t), p, s, sigma_c).pe,
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-10},
    )
    t_best = float(res.x) if res.fun <= pes[k] else float(candidates[k])
    return one_sensor_pe(rule_at(t_best), p, s, sigma_c)
