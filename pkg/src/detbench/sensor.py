"""Local sensor rules, their false-alarm/detection rates and the power budget.

The sensing stage observes ``X = s + V`` with ``s = +mu`` under H1 and
``s = -mu`` under H0, ``V ~ N(0, sigma_s^2)``. A quantize-and-report rule
sends level ``m1`` when ``X >= t`` and ``m0`` otherwise. The transmit budget
ties the pair of levels to the energy an unquantized sensor would spend,
``E_u = mu^2 + sigma_s^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import q_function


class DegenerateRuleError(ValueError):
    """Raised for rules that convey no information (equal transmit levels,
    or a level whose transmit probability is zero where one is required)."""


class InfeasibleLevelError(ValueError):
    """Raised when a requested m0 leaves no energy for the m1 level."""


@dataclass(frozen=True)
class Prior:
    """Hypothesis prior pair; ``eta`` is the ratio pi0/pi1 used by every LRT."""

    pi0: float
    pi1: float

    def __post_init__(self):
        object.__setattr__(self, "pi0", float(self.pi0))
        object.__setattr__(self, "pi1", float(self.pi1))
        if not (0.0 < self.pi0 < 1.0 and 0.0 < self.pi1 < 1.0):
            raise ValueError(f"Prior: probabilities must lie in (0, 1), got {self.pi0}, {self.pi1}")
        if abs(self.pi0 + self.pi1 - 1.0) > 1e-12:
            raise ValueError(f"Prior: probabilities sum to {self.pi0 + self.pi1}, expected 1")

    @classmethod
    def from_pi1(cls, pi1: float) -> "Prior":
        return cls(1.0 - float(pi1), float(pi1))

    @property
    def eta(self) -> float:
        return self.pi0 / self.pi1

    @property
    def min_error(self) -> float:
        """Error of the prior-only decision, the ceiling for any sane system."""
        return min(self.pi0, self.pi1)


@dataclass(frozen=True)
class SensingModel:
    """Signal amplitude and sensing-noise level of one sensor."""

    mu: float
    sigma_s: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma_s", float(self.sigma_s))
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ValueError(f"SensingModel: mu must be positive and finite, got {self.mu}")
        if not (self.sigma_s > 0.0 and math.isfinite(self.sigma_s)):
            raise ValueError(f"SensingModel: sigma_s must be positive and finite, got {self.sigma_s}")


@dataclass(frozen=True)
class SensorRule:
    """Single-threshold rule: report m1 when the observation is >= t, else m0.

    ``t`` may be +-inf (always send one level). Equal levels are rejected:
    such a rule is uninformative and would make the fusion test degenerate.
    """

    t: float
    m0: float
    m1: float

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "m0", float(self.m0))
        object.__setattr__(self, "m1", float(self.m1))
        if math.isnan(self.t):
            raise ValueError("SensorRule: threshold is NaN")
        if not (math.isfinite(self.m0) and math.isfinite(self.m1)):
            raise ValueError("SensorRule: transmit levels must be finite")
        if self.m0 == self.m1:
            raise DegenerateRuleError("SensorRule: m0 == m1 conveys no information")


@dataclass(frozen=True)
class RatePair:
    """Sensor-level operating point: pf = P(send m1 | H0), pd = P(send m1 | H1)."""

    pf: float
    pd: float

    def __post_init__(self):
        object.__setattr__(self, "pf", float(self.pf))
        object.__setattr__(self, "pd", float(self.pd))
        if not (0.0 <= self.pf <= 1.0 and 0.0 <= self.pd <= 1.0):
            raise ValueError(f"RatePair: rates must lie in [0, 1], got {self.pf}, {self.pd}")


def sensor_rates(t: float, s: SensingModel) -> RatePair:
    """Operating point of the threshold rule ``x >= t`` under Gaussian sensing.

    pd = Q((t - mu)/sigma_s) and pf = Q((t + mu)/sigma_s); pd >= pf always
    since the signal separation is positive.
    """
    if math.isnan(t):
        raise ValueError("sensor_rates: threshold is NaN")
    pd = q_function((t - s.mu) / s.sigma_s)
    pf = q_function((t + s.mu) / s.sigma_s)
    return RatePair(pf=pf, pd=pd)


def transmit_probs(r: RatePair, p: Prior) -> tuple[float, float]:
    """Marginal probabilities (p_m0, p_m1) that each level goes on the air."""
    p_m1 = p.pi0 * r.pf + p.pi1 * r.pd
    return 1.0 - p_m1, p_m1


def udd_energy(s: SensingModel) -> float:
    """Mean symbol energy of raw forwarding: E[X^2] = mu^2 + sigma_s^2."""
    return s.mu * s.mu + s.sigma_s * s.sigma_s


def qdd_energy(rule: SensorRule, r: RatePair, p: Prior) -> float:
    """Mean symbol energy of a two-level rule at the given operating point."""
    p_m0, p_m1 = transmit_probs(r, p)
    return p_m0 * rule.m0 * rule.m0 + p_m1 * rule.m1 * rule.m1


def solve_m1_under_power(m0: float, t: float, s: SensingModel, p: Prior, sign: int = 1) -> float:
    """Level m1 that makes the rule spend exactly the unquantized budget.

    Solves p_m0*m0^2 + p_m1*m1^2 = E_u for m1; ``sign`` (+1/-1) picks the
    root. Raises InfeasibleLevelError when m0 alone exceeds the budget and
    DegenerateRuleError when m1 is never transmitted (p_m1 = 0).
    """
    if sign not in (1, -1):
        raise ValueError("solve_m1_under_power: sign must be +1 or -1")
    rates = sensor_rates(t, s)
    p_m0, p_m1 = transmit_probs(rates, p)
    if p_m1 <= 0.0:
        raise DegenerateRuleError("solve_m1_under_power: p_m1 = 0, level m1 is never sent")
    e_u = udd_energy(s)
    residual = e_u - p_m0 * m0 * m0
    if residual < -1e-12 * e_u:
        raise InfeasibleLevelError(
            f"solve_m1_under_power: m0={m0} spends {p_m0 * m0 * m0:.6g} > E_u={e_u:.6g}"
        )
    return sign * math.sqrt(max(residual, 0.0) / p_m1)
