"""Simulation oracle: sample the full chain and fuse with the exact LRT.

Each trial draws a hypothesis from the prior, sensing noise, applies the
sensor rules, adds reporting noise and lets the fusion center run the exact
analytic likelihood-ratio test on the received values. Because the fusion
side is analytic, the only stochastic error is sampling error, which makes
the estimate a clean oracle for every closed-form and quadrature evaluator
(and the only exact-rate tool for more than two sensors).

Reproducibility: trials are laid out in fixed-size chunks; chunk c uses the
counter-based Philox generator jumped by c, and a full chunk is always
generated even when only part of it is consumed. A trial's draws therefore
depend only on (seed, trial index): growing the trial count never reshuffles
earlier trials, and identical configs give identical estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .fusion_multi import (
    CorrelatedChannel,
    IndependentChannel,
    SystemSpec,
    fc_density_correlated,
    fc_density_independent,
)
from .numerics import mixture_logpdf_1d, mixture_logpdf_2d

_CHUNK_ROWS = 1 << 16


@dataclass(frozen=True)
class McConfig:
    """Trial budget, seed and the system to simulate."""

    trials: int
    seed: int
    system: SystemSpec

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"McConfig: trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class McEstimate:
    """Error-rate estimate with its binomial standard error."""

    pe_hat: float
    stderr: float
    trials: int
    seed: int


def _chunk_draws(seed: int, chunk_index: int, n_sensors: int):
    """Uniform and normal draws for one full chunk (trials x columns)."""
    rng = Generator(Philox(key=seed).jumped(chunk_index))
    u = rng.random(_CHUNK_ROWS)
    g = rng.standard_normal((_CHUNK_ROWS, 2 * n_sensors))
    return u, g


def _apply_sensors(spec: SystemSpec, h1: np.ndarray, g_sense: np.ndarray) -> np.ndarray:
    """Observations through the sensor rules; raw forwarding passes x through."""
    n = spec.n_sensors
    y = np.empty_like(g_sense)
    sign = np.where(h1, 1.0, -1.0)
    for k, (s, rule) in enumerate(spec.sensors):
        x = sign * s.mu + s.sigma_s * g_sense[:, k]
        if rule is None:
            y[:, k] = x
        else:
            y[:, k] = np.where(x >= rule.t, rule.m1, rule.m0)
    return y


def _count_errors(spec: SystemSpec, correlated: bool, trials: int, seed: int) -> int:
    p = spec.prior
    n = spec.n_sensors
    log_eta = math.log(p.eta)
    if correlated:
        ch = spec.channel
        f0, f1 = fc_density_correlated(spec)
        root = math.sqrt(1.0 - ch.rho**2)
    else:
        densities = fc_density_independent(spec)

    errors = 0
    n_chunks = (trials + _CHUNK_ROWS - 1) // _CHUNK_ROWS
    for chunk in range(n_chunks):
        rows = min(_CHUNK_ROWS, trials - chunk * _CHUNK_ROWS)
        u, g = _chunk_draws(seed, chunk, n)
        h1 = u[:rows] < p.pi1
        y = _apply_sensors(spec, h1, g[:rows, :n])
        if correlated:
            w1 = ch.sigma_c1 * g[:rows, n]
            w2 = ch.sigma_c2 * (ch.rho * g[:rows, n] + root * g[:rows, n + 1])
            z1 = y[:, 0] + w1
            z2 = y[:, 1] + w2
            llr = mixture_logpdf_2d(f1, z1, z2) - mixture_logpdf_2d(f0, z1, z2)
        else:
            llr = np.zeros(rows)
            for k, (f0k, f1k) in enumerate(densities):
                zk = y[:, k] + spec.channel.sigma_c[k] * g[:rows, n + k]
                llr += mixture_logpdf_1d(f1k, zk) - mixture_logpdf_1d(f0k, zk)
        decide_h1 = llr >= log_eta
        errors += int(np.sum(decide_h1 != h1))
    return errors


def _estimate(errors: int, cfg: McConfig) -> McEstimate:
    pe_hat = errors / cfg.trials
    stderr = math.sqrt(pe_hat * (1.0 - pe_hat) / cfg.trials)
    return McEstimate(pe_hat=pe_hat, stderr=stderr, trials=cfg.trials, seed=cfg.seed)


def simulate_pe(cfg: McConfig) -> McEstimate:
    """Monte Carlo Bayes-error estimate over independent reporting channels."""
    if not isinstance(cfg.system.channel, IndependentChannel):
        raise ValueError("simulate_pe: requires an independent channel "
                         "(use simulate_pe_correlated otherwise)")
    return _estimate(_count_errors(cfg.system, False, cfg.trials, cfg.seed), cfg)


def simulate_pe_correlated(cfg: McConfig) -> McEstimate:
    """Monte Carlo estimate for two sensors over a correlated channel; the
    noise pair is built from two independent normals by the standard
    construction (w2 = sigma_c2 (rho g1 + sqrt(1-rho^2) g2))."""
    if not isinstance(cfg.system.channel, CorrelatedChannel):
        raise ValueError("simulate_pe_correlated: requires a correlated channel")
    return _estimate(_count_errors(cfg.system, True, cfg.trials, cfg.seed), cfg)
