"""Error exponents and equal-performance boundaries on the noise plane.

With many i.i.d. sensors the Bayes error decays exponentially at the
Chernoff information rate of the single-sensor fusion densities. For the
raw-forwarding system those densities are N(+-mu, sigma_s^2 + sigma_c^2),
giving the closed form mu^2 / (2 (sigma_s^2 + sigma_c^2)). For the
quantized system at equal priors the optimal rule is symmetric
(t = 0, levels -+sqrt(E_u)), the fusion densities are mirror-image
mixtures, and the optimizing exponent parameter is 1/2 by symmetry, so the
Chernoff information reduces to -ln of the Bhattacharyya coefficient,
evaluated here by adaptive quadrature.

``boundary_curve`` traces, for each sensing-noise level, the channel-noise
level at which one system stops outperforming the other (sign change of the
comparator difference), either for the exact one-sensor errors or for the
asymptotic exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fusion_one import equal_prior_closed_pe
from .fusion_multi import udd_pe_independent
from .numerics import Mixture1D, bisect_root, integrate_1d, mixture_logpdf_1d, q_function
from .sensor import Prior, SensingModel, udd_energy

REGIME_ONE_SENSOR = "one_sensor"
REGIME_ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class BoundaryCurve:
    """Equal-performance roots sigma_c*(sigma_s); grid points without a
    verified sign change inside the bracket are listed in ``no_crossing``."""

    regime: str
    comparator: str
    points: tuple[tuple[float, float], ...]
    no_crossing: tuple[float, ...]


def chernoff_gaussian(mu: float, sigma: float) -> float:
    """Chernoff information between N(+mu, sigma^2) and N(-mu, sigma^2), in nats."""
    if not (sigma > 0.0):
        raise ValueError(f"chernoff_gaussian: sigma must be positive, got {sigma}")
    return mu * mu / (2.0 * sigma * sigma)


def chernoff_mixture_half(f1: Mixture1D, f0: Mixture1D, tol: float = 1e-12) -> float:
    """Chernoff information at exponent 1/2: -ln integral sqrt(f1 f0), nats.

    Exact for mirror-symmetric density pairs, where 1/2 is the optimizing
    exponent. The integrand is evaluated through log-densities so that well
    separated mixtures (tiny overlap) stay accurate, and the quadrature
    tolerance is rescaled to the overlap magnitude.
    """
    lo0, hi0 = f0.support_hull(span=9.0)
    lo1, hi1 = f1.support_hull(span=9.0)
    lo, hi = min(lo0, lo1), max(hi0, hi1)

    def integrand(z):
        return np.exp(0.5 * (mixture_logpdf_1d(f1, z) + mixture_logpdf_1d(f0, z)))

    rough = integrate_1d(integrand, lo, hi, tol=1e-6)
    scaled_tol = max(tol * max(rough, 1e-300), 1e-300)
    coeff = integrate_1d(integrand, lo, hi, tol=scaled_tol)
    if coeff <= 0.0:
        raise ValueError("chernoff_mixture_half: overlap integral vanished")
    return -math.log(coeff)


def _qdd_symmetric_densities(mu: float, sigma_s: float, sigma_c: float):
    """Equal-prior quantized fusion densities for t=0, levels -+sqrt(E_u)."""
    s = SensingModel(mu=mu, sigma_s=sigma_s)
    level = math.sqrt(udd_energy(s))
    pf = q_function(mu / sigma_s)
    pd = 1.0 - pf
    f0 = Mixture1D(components=((1.0 - pf, -level, sigma_c), (pf, level, sigma_c)))
    f1 = Mixture1D(components=((1.0 - pd, -level, sigma_c), (pd, level, sigma_c)))
    return f1, f0


def quantized_advantage(regime: str, p: Prior, mu: float, sigma_s: float, sigma_c: float) -> float:
    """Comparator difference; positive where the quantized system wins.

    One-sensor regime compares exact Bayes errors (raw minus quantized);
    asymptotic regime compares Chernoff informations (quantized minus raw).
    """
    s = SensingModel(mu=mu, sigma_s=sigma_s)
    if regime == REGIME_ONE_SENSOR:
        return udd_pe_independent(1, p, s, sigma_c) - equal_prior_closed_pe(s, sigma_c)
    if regime == REGIME_ASYMPTOTIC:
        f1, f0 = _qdd_symmetric_densities(mu, sigma_s, sigma_c)
        c_q = chernoff_mixture_half(f1, f0)
        c_u = chernoff_gaussian(mu, math.hypot(sigma_s, sigma_c))
        return c_q - c_u
    raise ValueError(f"quantized_advantage: unknown regime {regime!r}")


def boundary_curve(regime: str, p: Prior, mu: float,
                   sigma_s_grid: Sequence[float],
                   search_bracket: tuple[float, float] = (0.05, 6.0),
                   scan_points: int = 61, tol: float = 1e-4) -> BoundaryCurve:
    """Locate sigma_c*(sigma_s) where the comparator difference changes sign.

    The bracket is scanned on a uniform grid; the first adjacent sign change
    is refined by bisection to ``tol`` and then verified to have opposite
    comparator signs at sigma_c* +- 1e-3. Grid points without a verified
    crossing are reported, not fatal. Requires equal priors, the setting in
    which both comparators have closed or symmetric form.
    """
    if abs(p.pi1 - 0.5) > 1e-12:
        raise ValueError("boundary_curve: defined for equal priors (pi1 = 0.5)")
    lo, hi = search_bracket
    if not (0.0 < lo < hi):
        raise ValueError(f"boundary_curve: bad bracket {search_bracket}")

    points: list[tuple[float, float]] = []
    missing: list[float] = []
    scan = np.linspace(lo, hi, scan_points)
    for sigma_s in sigma_s_grid:
        def diff(sigma_c: float) -> float:
            return quantized_advantage(regime, p, mu, sigma_s, sigma_c)

        vals = np.array([diff(sc) for sc in scan])
        signs = np.sign(vals)
        root = None
        for i in range(len(scan) - 1):
            if signs[i] != 0.0 and signs[i + 1] != 0.0 and signs[i] != signs[i + 1]:
                root = bisect_root(diff, scan[i], scan[i + 1], tol=tol)
                break
        if root is None:
            missing.append(float(sigma_s))
            continue
        before = diff(max(root - 1e-3, lo * 0.5))
        after = diff(root + 1e-3)
        if before == 0.0 or after == 0.0 or math.copysign(1.0, before) == math.copysign(1.0, after):
            missing.append(float(sigma_s))  # tangency or numerically flat: no verified crossing
            continue
        points.append((float(sigma_s), float(root)))
    return BoundaryCurve(regime=regime, comparator="udd_vs_qdd",
                         points=tuple(points), no_crossing=tuple(missing))
