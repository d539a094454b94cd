"""Fusion-center densities and exact Bayes errors for one and two sensors.

Hypothesis-conditional densities at the fusion center are Gaussian mixtures:
each quantize-and-report sensor contributes two components (one per transmit
level) weighted by its operating point, and a raw-forwarding sensor
contributes a single Gaussian whose variance absorbs the sensing noise. A
raw-forwarding sensor is exactly the degenerate quantizer with rates (0, 1)
and levels (-mu, +mu), which lets every evaluator share one code path.

Three independent evaluation routes are provided for cross-validation:

* closed forms (raw forwarding, and the per-slice reduction below);
* ``lrt_bayes_error_2d`` -- fixed tensor-grid integration of
  min(pi0*f0, pi1*f1);
* ``lrt_bayes_error_2d_slices`` -- per-slice exact integration: for each z1
  the signed slice density is a 1-D Gaussian mixture whose sign-change roots
  are isolated and the decide-H1 mass integrated through normal CDFs.

``two_sensor_pe_independent`` exploits independence across reporting
channels: conditioning on z1 turns the fusion test on z2 into the one-sensor
problem with the prior ratio replaced by eta * f0(z1)/f1(z1), so the inner
integral collapses to closed-form tail probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    Grid2D,
    Mixture1D,
    Mixture2D,
    integrate_1d,
    mixture_logpdf_1d,
    mixture_pdf_1d,
    mixture_pdf_2d,
    normal_cdf,
    q_function,
)
from .fusion_one import two_level_fc_pe
from .sensor import Prior, SensingModel, SensorRule, sensor_rates

#: components lighter than this (under both hypotheses) are ignored when
#: choosing integration bounds and slice windows; they cannot move any
#: probability by more than the floor itself.
NEGLIGIBLE_WEIGHT = 1e-13


class GridCoverageError(ValueError):
    """The supplied grid does not cover every relevant component mean."""


class ConsistencyError(RuntimeError):
    """Two supposedly-equivalent evaluation routes disagreed badly."""


@dataclass(frozen=True)
class IndependentChannel:
    """Per-sensor independent AWGN reporting channels."""

    sigma_c: tuple[float, ...]

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigma_c)
        object.__setattr__(self, "sigma_c", sig)
        if not sig:
            raise ValueError("IndependentChannel: need at least one sigma_c")
        if any(not (s > 0.0 and math.isfinite(s)) for s in sig):
            raise ValueError(f"IndependentChannel: sigmas must be positive and finite, got {sig}")


@dataclass(frozen=True)
class CorrelatedChannel:
    """Bivariate AWGN reporting noise with correlation rho (two sensors)."""

    rho: float
    sigma_c1: float
    sigma_c2: float

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "sigma_c1", float(self.sigma_c1))
        object.__setattr__(self, "sigma_c2", float(self.sigma_c2))
        if not (abs(self.rho) < 1.0):
            raise ValueError(f"CorrelatedChannel: |rho| must be < 1, got {self.rho}")
        if not (self.sigma_c1 > 0.0 and self.sigma_c2 > 0.0):
            raise ValueError("CorrelatedChannel: sigmas must be positive")


ChannelModel = IndependentChannel | CorrelatedChannel


@dataclass(frozen=True)
class SystemSpec:
    """A full system: prior, per-sensor (sensing model, rule) and the channel.

    ``rule=None`` marks a raw-forwarding (unquantized) sensor. Exact
    evaluation supports one or two sensors; larger systems are handled by
    the Monte Carlo module.
    """

    prior: Prior
    sensors: tuple[tuple[SensingModel, SensorRule | None], ...]
    channel: ChannelModel

    def __post_init__(self):
        sensors = tuple((s, r) for s, r in self.sensors)
        object.__setattr__(self, "sensors", sensors)
        n = len(sensors)
        if n < 1:
            raise ValueError("SystemSpec: need at least one sensor")
        if isinstance(self.channel, IndependentChannel):
            if len(self.channel.sigma_c) != n:
                raise ValueError(
                    f"SystemSpec: channel has {len(self.channel.sigma_c)} sigmas for {n} sensors"
                )
        elif isinstance(self.channel, CorrelatedChannel):
            if n != 2:
                raise ValueError("SystemSpec: correlated channel requires exactly 2 sensors")
        else:
            raise TypeError(f"SystemSpec: unknown channel model {type(self.channel)!r}")

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @classmethod
    def iid(cls, prior: Prior, sensing: SensingModel, rule: SensorRule | None,
            n: int, sigma_c: float) -> "SystemSpec":
        """Identical sensors over identical independent channels."""
        return cls(prior=prior, sensors=tuple((sensing, rule) for _ in range(n)),
                   channel=IndependentChannel(sigma_c=(float(sigma_c),) * n))


@dataclass(frozen=True)
class _CanonicalReport:
    """One sensor seen from the fusion center: two levels, rates, noise."""

    m0: float
    m1: float
    pf: float
    pd: float
    sigma: float
    extra_var: float  # sensing variance folded into the channel (raw forwarding)


def _canonical_report(s: SensingModel, rule: SensorRule | None, sigma_c: float) -> _CanonicalReport:
    if rule is None:
        return _CanonicalReport(
            m0=-s.mu, m1=s.mu, pf=0.0, pd=1.0,
            sigma=math.hypot(s.sigma_s, sigma_c), extra_var=s.sigma_s**2,
        )
    r = sensor_rates(rule.t, s)
    return _CanonicalReport(m0=rule.m0, m1=rule.m1, pf=r.pf, pd=r.pd,
                            sigma=sigma_c, extra_var=0.0)


def udd_pe_independent(n: int, p: Prior, s: SensingModel, sigma_c: float) -> float:
    """Closed-form Bayes error of n i.i.d. raw-forwarding sensors.

    The optimal fusion statistic is the plain sum of the received values,
    tested against t_z = (sigma^2 / 2 mu) ln(eta) with
    sigma^2 = sigma_s^2 + sigma_c^2.
    """
    if n < 1:
        raise ValueError(f"udd_pe_independent: n must be >= 1, got {n}")
    if not (sigma_c > 0.0):
        raise ValueError(f"udd_pe_independent: sigma_c must be positive, got {sigma_c}")
    var = s.sigma_s**2 + sigma_c**2
    sig = math.sqrt(var)
    t_z = var / (2.0 * s.mu) * math.log(p.eta)
    root_n = math.sqrt(n)
    p_f = q_function((t_z + n * s.mu) / (root_n * sig))
    p_d = q_function((t_z - n * s.mu) / (root_n * sig))
    return p.pi0 * p_f + p.pi1 * (1.0 - p_d)


def _udd_correlated_moments(s1: SensingModel, s2: SensingModel, ch: CorrelatedChannel):
    sig1 = math.hypot(s1.sigma_s, ch.sigma_c1)
    sig2 = math.hypot(s2.sigma_s, ch.sigma_c2)
    rho_hat = ch.rho * ch.sigma_c1 * ch.sigma_c2 / (sig1 * sig2)
    return sig1, sig2, rho_hat


def udd_pe_correlated(p: Prior, s1: SensingModel, s2: SensingModel,
                      ch: CorrelatedChannel, grid: Grid2D | None = None,
                      cross_check: bool = True) -> float:
    """Bayes error of two raw-forwarding sensors over correlated channels.

    The fusion problem is a two-Gaussian test with common covariance, so the
    log-likelihood ratio is a linear statistic and the error has a closed
    form in the Mahalanobis distance. The closed form is returned; when
    ``cross_check`` is set it is also validated against the 2-D numeric LRT
    route, raising ConsistencyError on disagreement beyond 5e-5.
    """
    sig1, sig2, rho_hat = _udd_correlated_moments(s1, s2, ch)
    det = sig1**2 * sig2**2 * (1.0 - rho_hat**2)
    m1, m2 = s1.mu, s2.mu
    # gamma = m^T Sigma^{-1} m via the explicit 2x2 inverse
    gamma = (m1 * m1 * sig2**2 - 2.0 * m1 * m2 * rho_hat * sig1 * sig2 + m2 * m2 * sig1**2) / det
    half_log_eta = 0.5 * math.log(p.eta)
    root_g = math.sqrt(gamma)
    p_f = q_function((half_log_eta + gamma) / root_g)
    p_d = q_function((half_log_eta - gamma) / root_g)
    pe = p.pi0 * p_f + p.pi1 * (1.0 - p_d)
    if cross_check:
        f0 = Mixture2D(components=((1.0, -m1, -m2),), sigma1=sig1, sigma2=sig2, rho=rho_hat)
        f1 = Mixture2D(components=((1.0, m1, m2),), sigma1=sig1, sigma2=sig2, rho=rho_hat)
        numeric = lrt_bayes_error_2d(f1, f0, p, grid=grid)
        if abs(numeric - pe) > 5e-5:
            raise ConsistencyError(
                f"udd_pe_correlated: closed form {pe:.8g} vs numeric {numeric:.8g}"
            )
    return pe


def fc_density_independent(spec: SystemSpec) -> list[tuple[Mixture1D, Mixture1D]]:
    """Per-sensor fusion-center marginals as (f(z|H0), f(z|H1)) pairs."""
    if not isinstance(spec.channel, IndependentChannel):
        raise ValueError("fc_density_independent: requires an independent channel")
    out = []
    for (s, rule), sc in zip(spec.sensors, spec.channel.sigma_c):
        rep = _canonical_report(s, rule, sc)
        f0 = Mixture1D(components=((1.0 - rep.pf, rep.m0, rep.sigma), (rep.pf, rep.m1, rep.sigma)))
        f1 = Mixture1D(components=((1.0 - rep.pd, rep.m0, rep.sigma), (rep.pd, rep.m1, rep.sigma)))
        out.append((f0, f1))
    return out


def fc_density_correlated(spec: SystemSpec) -> tuple[Mixture2D, Mixture2D]:
    """Joint fusion-center density pair (f0, f1) over a correlated channel.

    Components are the product grid of the two sensors' transmit levels with
    product weights; raw-forwarding sensors contribute a single pseudo-level
    per hypothesis with the sensing variance folded into their axis.
    """
    if not isinstance(spec.channel, CorrelatedChannel):
        raise ValueError("fc_density_correlated: requires a correlated channel")
    ch = spec.channel
    (sa, ra), (sb, rb) = spec.sensors
    rep1 = _canonical_report(sa, ra, ch.sigma_c1)
    rep2 = _canonical_report(sb, rb, ch.sigma_c2)
    rho_eff = ch.rho * ch.sigma_c1 * ch.sigma_c2 / (rep1.sigma * rep2.sigma)
    comps0 = []
    comps1 = []
    for lvl1, w01, w11 in ((rep1.m0, 1.0 - rep1.pf, 1.0 - rep1.pd), (rep1.m1, rep1.pf, rep1.pd)):
        for lvl2, w02, w12 in ((rep2.m0, 1.0 - rep2.pf, 1.0 - rep2.pd), (rep2.m1, rep2.pf, rep2.pd)):
            comps0.append((w01 * w02, lvl1, lvl2))
            comps1.append((w11 * w12, lvl1, lvl2))
    f0 = Mixture2D(components=tuple(comps0), sigma1=rep1.sigma, sigma2=rep2.sigma, rho=rho_eff)
    f1 = Mixture2D(components=tuple(comps1), sigma1=rep1.sigma, sigma2=rep2.sigma, rho=rho_eff)
    return f0, f1


def _pooled_axis_hull(f1: Mixture2D, f0: Mixture2D, axis: int, span: float):
    lo = math.inf
    hi = -math.inf
    for m in (f0, f1):
        sig = m.sigma1 if axis == 0 else m.sigma2
        for w, a, b in m.components:
            mean = a if axis == 0 else b
            if w < NEGLIGIBLE_WEIGHT:
                continue
            lo = min(lo, mean - span * sig)
            hi = max(hi, mean + span * sig)
    if not math.isfinite(lo):
        raise ValueError("mixture pair has no non-negligible component")
    return lo, hi


def default_grid_2d(f1: Mixture2D, f0: Mixture2D, n: int = 801, span: float = 8.0) -> Grid2D:
    """Grid over the hull of the non-negligible component means +- span*sigma.

    At the default density the decision-boundary kink of the min integrand
    costs up to ~1e-6 absolute for adversarial level placements; callers
    needing tighter agreement should densify (error falls roughly as 1/n^2).
    """
    x_lo, x_hi = _pooled_axis_hull(f1, f0, 0, span)
    y_lo, y_hi = _pooled_axis_hull(f1, f0, 1, span)
    return Grid2D(x_lo=x_lo, x_hi=x_hi, nx=n, y_lo=y_lo, y_hi=y_hi, ny=n)


def lrt_bayes_error_2d(f1: Mixture2D, f0: Mixture2D, p: Prior,
                       grid: Grid2D | None = None) -> float:
    """Bayes error of the optimal fusion test by tensor-grid integration.

    Integrates min(pi0*f0, pi1*f1), which equals the error of the decide-H1
    region {pi1 f1 >= pi0 f0} without locating the region boundary (the
    region can be disconnected for mixtures). Accuracy is set by the grid.
    """
    if grid is None:
        grid = default_grid_2d(f1, f0)
    for m in (f0, f1):
        for w, a, b in m.components:
            if w < NEGLIGIBLE_WEIGHT:
                continue
            if not (grid.x_lo <= a <= grid.x_hi and grid.y_lo <= b <= grid.y_hi):
                raise GridCoverageError(
                    f"lrt_bayes_error_2d: component mean ({a}, {b}) outside grid"
                )
    x = grid.x_nodes()
    y = grid.y_nodes()
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals = np.minimum(p.pi0 * mixture_pdf_2d(f0, X, Y), p.pi1 * mixture_pdf_2d(f1, X, Y))
    from .numerics import _axis_weights  # shared with integrate_2d

    return float(_axis_weights(x) @ vals @ _axis_weights(y))


def lrt_bayes_error_1d(f1: Mixture1D, f0: Mixture1D, p: Prior, tol: float = 1e-10) -> float:
    """Bayes error of the optimal test on a pair of 1-D mixtures, by adaptive
    integration of min(pi0*f0, pi1*f1) over their joint support."""
    lo0, hi0 = f0.support_hull(span=9.0)
    lo1, hi1 = f1.support_hull(span=9.0)
    lo, hi = min(lo0, lo1), max(hi0, hi1)

    def integrand(z):
        return np.minimum(p.pi0 * mixture_pdf_1d(f0, z), p.pi1 * mixture_pdf_1d(f1, z))

    return integrate_1d(integrand, lo, hi, tol=tol)


def two_sensor_pe_independent(spec: SystemSpec, grid: Grid2D | None = None,
                              n_nodes: int = 801,
                              weight_floor: float = NEGLIGIBLE_WEIGHT) -> float:
    """Bayes error of a two-sensor system over independent channels.

    Conditioning on the first sensor's received value z1 reduces the fusion
    test on z2 to the one-sensor threshold problem with prior ratio
    eta* = eta * f0(z1)/f1(z1); the conditional false-alarm and detection
    masses then have closed forms, leaving a single smooth 1-D integral over
    z1 (composite Simpson on the outer grid axis, 801 nodes by default).
    ``weight_floor`` controls which components may be ignored when choosing
    the outer integration range.
    """
    if spec.n_sensors != 2:
        raise ValueError("two_sensor_pe_independent: requires exactly 2 sensors")
    if not isinstance(spec.channel, IndependentChannel):
        raise ValueError("two_sensor_pe_independent: requires an independent channel")
    (sa, ra), (sb, rb) = spec.sensors
    rep1 = _canonical_report(sa, ra, spec.channel.sigma_c[0])
    rep2 = _canonical_report(sb, rb, spec.channel.sigma_c[1])
    p = spec.prior

    # an uninformative sensor contributes nothing: fall back to one sensor
    if rep2.pf == rep2.pd:
        return two_level_fc_pe(rep1.pf, rep1.pd, rep1.m0, rep1.m1, p, rep1.sigma).pe
    if rep1.pf == rep1.pd:
        return two_level_fc_pe(rep2.pf, rep2.pd, rep2.m0, rep2.m1, p, rep2.sigma).pe

    m20, m21, pf2, pd2 = rep2.m0, rep2.m1, rep2.pf, rep2.pd
    if pd2 < pf2:  # relabel the second sensor's levels so pd2 >= pf2
        m20, m21 = m21, m20
        pf2, pd2 = 1.0 - pf2, 1.0 - pd2

    f01 = Mixture1D(components=((1.0 - rep1.pf, rep1.m0, rep1.sigma), (rep1.pf, rep1.m1, rep1.sigma)))
    f11 = Mixture1D(components=((1.0 - rep1.pd, rep1.m0, rep1.sigma), (rep1.pd, rep1.m1, rep1.sigma)))

    log_r0 = math.log(pd2) - math.log(pf2) if pf2 > 0.0 else math.inf
    log_r1 = math.log1p(-pd2) - math.log1p(-pf2) if pd2 < 1.0 else -math.inf

    def log_eta_star(z1):
        return math.log(p.eta) + mixture_logpdf_1d(f01, z1) - mixture_logpdf_1d(f11, z1)

    def integrand(z1):
        les = log_eta_star(z1)
        p_f2 = np.zeros_like(z1)
        p_d2 = np.zeros_like(z1)
        always_h1 = les <= log_r1
        p_f2[always_h1] = 1.0
        p_d2[always_h1] = 1.0
        mid = ~always_h1 & (les < log_r0)
        if np.any(mid):
            with np.errstate(over="ignore", divide="ignore"):
                eta_star = np.exp(les[mid])
                # pf2 = 0 puts no ceiling on eta*; avoid inf * 0 in the denominator
                if pf2 > 0.0:
                    denom = pd2 - eta_star * pf2
                else:
                    denom = np.full_like(eta_star, pd2)
                # rounding right at a regime boundary can flip the sign of the
                # denominator or of lambda; push such points to their limits
                lam = np.where(denom > 0.0,
                               1.0 + (eta_star - 1.0) / np.where(denom > 0.0, denom, 1.0),
                               np.inf)
                lam = np.maximum(lam, 1e-300)
                t_z2 = rep2.sigma**2 / (m21 - m20) * np.log(lam) + 0.5 * (m20 + m21)
            q0 = q_function((t_z2 - m20) / rep2.sigma)
            q1 = q_function((t_z2 - m21) / rep2.sigma)
            if m21 > m20:
                p_f2[mid] = (1.0 - pf2) * q0 + pf2 * q1
                p_d2[mid] = (1.0 - pd2) * q0 + pd2 * q1
            else:
                p_f2[mid] = (1.0 - pf2) * (1.0 - q0) + pf2 * (1.0 - q1)
                p_d2[mid] = (1.0 - pd2) * (1.0 - q0) + pd2 * (1.0 - q1)
        return (p.pi0 * mixture_pdf_1d(f01, z1) * p_f2
                - p.pi1 * mixture_pdf_1d(f11, z1) * p_d2)

    if grid is not None:
        from .numerics import _axis_weights

        z1 = grid.x_nodes()
        pe = p.pi1 + float(_axis_weights(z1) @ integrand(z1))
        return min(max(pe, 0.0), 1.0)

    lo, hi = f01.support_hull(span=8.5, weight_floor=weight_floor)
    lo1, hi1 = f11.support_hull(span=8.5, weight_floor=weight_floor)
    lo, hi = min(lo, lo1), max(hi, hi1)
    # The inner tail masses switch regimes where log eta*(z1) crosses the
    # boundary ratios; the mixture log-ratio is monotone, so each boundary is
    # crossed at most once and the crossing solves in closed form. The
    # integrand is smooth but has a steep boundary layer at each crossing, so
    # panel edges are graded geometrically into the crossing on top of a
    # uniform composite Gauss-Legendre baseline.
    base_panels = max(48, min(max(n_nodes // 8, int(2.0 * (hi - lo) / rep1.sigma)), 2500))
    edges = [np.linspace(lo, hi, base_panels + 1)]
    dm1 = rep1.m1 - rep1.m0
    for level in (log_r0, log_r1):
        if not math.isfinite(level):
            continue
        # solve f01/f11 = R: ((1-pf1) + pf1 r) = R ((1-pd1) + pd1 r) in
        # r = exp(dm1 (z - mid)/sigma^2), the two-component likelihood ratio
        ratio = math.exp(level - math.log(p.eta))
        denom = rep1.pf - ratio * rep1.pd
        numer = ratio * (1.0 - rep1.pd) - (1.0 - rep1.pf)
        if denom == 0.0 or numer / denom <= 0.0:
            continue
        star = 0.5 * (rep1.m0 + rep1.m1) + rep1.sigma**2 / dm1 * math.log(numer / denom)
        if not (lo < star < hi):
            continue
        graded = star + rep1.sigma * 2.0 ** -np.arange(0, 49, dtype=float)
        graded = np.concatenate([graded, 2.0 * star - graded, [star]])
        edges.append(graded)
    all_edges = np.unique(np.clip(np.concatenate(edges), lo, hi))
    left = all_edges[:-1]
    right = all_edges[1:]
    keep = right > left
    left, right = left[keep], right[keep]
    gx, gw = np.polynomial.legendre.leggauss(8)
    centers = 0.5 * (left + right)
    halves = 0.5 * (right - left)
    z1 = (centers[:, None] + halves[:, None] * gx[None, :]).ravel()
    w_z1 = (halves[:, None] * gw[None, :]).ravel()
    pe = p.pi1 + float(np.dot(w_z1, integrand(z1)))
    return min(max(pe, 0.0), 1.0)


def _forward_fill_sign(sgn: np.ndarray):
    """Per row: sign of the last non-zero sample seen so far, and its index."""
    n, s = sgn.shape
    idx = np.where(sgn != 0, np.arange(s)[None, :], -1)
    last_idx = np.maximum.accumulate(idx, axis=1)
    rows = np.arange(n)[:, None]
    carry = np.where(last_idx >= 0, sgn[rows, np.maximum(last_idx, 0)], 0)
    return carry, last_idx


def lrt_bayes_error_2d_slices(f1: Mixture2D, f0: Mixture2D, p: Prior,
                              panels: int = 48, order: int = 10,
                              n_samples: int = 201, refine_iters: int = 45,
                              weight_floor: float = NEGLIGIBLE_WEIGHT) -> float:
    """Bayes error of the optimal fusion test by per-slice exact integration.

    Writes pe = pi1 + integral of min(g, 0) with g = pi0*f0 - pi1*f1. For
    each outer node z1 (composite Gauss-Legendre), g(z1, .) is a signed 1-D
    Gaussian mixture over the components' conditional means; its sign-change
    roots are bracketed on a per-slice sample window and refined by
    bisection, after which each negative segment's mass is exact through
    normal CDFs. Segment signs follow from the sampled sign pattern, which
    alternates between detected roots by construction.
    """
    if not (f0.sigma1 == f1.sigma1 and f0.sigma2 == f1.sigma2 and f0.rho == f1.rho):
        raise ValueError("lrt_bayes_error_2d_slices: mixtures must share covariance")
    s1, s2, rho = f0.sigma1, f0.sigma2, f0.rho

    means = []
    signed_w = []
    for mix, scale in ((f0, p.pi0), (f1, -p.pi1)):
        for w, a, b in mix.components:
            if w < weight_floor:
                continue
            means.append((a, b))
            signed_w.append(scale * w)
    means = np.asarray(means)
    signed_w = np.asarray(signed_w)
    if len(means) == 0:
        raise ValueError("lrt_bayes_error_2d_slices: no non-negligible components")

    s_cond = s2 * math.sqrt(1.0 - rho * rho)
    lo1 = means[:, 0].min() - 8.5 * s1
    hi1 = means[:, 0].max() + 8.5 * s1
    # widen the panel count when far-apart levels stretch the outer hull
    panels = max(panels, min(int(math.ceil((hi1 - lo1) / (2.0 * s1))), 400))
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo1, hi1, panels + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    z1 = (centers[:, None] + half * gx[None, :]).ravel()
    w_z1 = (half * np.tile(gw, (panels, 1))).ravel()
    n_nodes = len(z1)

    phi1 = np.exp(-0.5 * ((z1[:, None] - means[None, :, 0]) / s1) ** 2) / (math.sqrt(2 * math.pi) * s1)
    d_mat = signed_w[None, :] * phi1                                   # (N, C)
    cond_mean = means[None, :, 1] + rho * (s2 / s1) * (z1[:, None] - means[None, :, 0])

    win_lo = cond_mean.min(axis=1) - 9.0 * s_cond
    win_hi = cond_mean.max(axis=1) + 9.0 * s_cond
    # sample densely enough to isolate every root of the slice mixture
    max_width = float(np.max(win_hi - win_lo))
    n_samples = max(n_samples, min(int(math.ceil(4.0 * max_width / s_cond)) + 1, 2501))
    frac = np.linspace(0.0, 1.0, n_samples)
    z2s = win_lo[:, None] + (win_hi - win_lo)[:, None] * frac[None, :]  # (N, S)
    g_samples = np.einsum(
        "nc,nsc->ns", d_mat,
        np.exp(-0.5 * ((z2s[:, :, None] - cond_mean[:, None, :]) / s_cond) ** 2),
    )
    sgn = np.sign(g_samples)

    carry, last_idx = _forward_fill_sign(sgn)
    flips = (sgn[:, 1:] != 0) & (carry[:, :-1] != 0) & (sgn[:, 1:] != carry[:, :-1])
    node_i, right_j = np.nonzero(flips)
    right_j = right_j + 1
    left_j = last_idx[node_i, right_j - 1]

    a = z2s[node_i, left_j].copy()
    b = z2s[node_i, right_j].copy()
    g_a = g_samples[node_i, left_j].copy()
    for _ in range(refine_iters):
        mid = 0.5 * (a + b)
        e = np.exp(-0.5 * ((mid[:, None] - cond_mean[node_i]) / s_cond) ** 2)
        g_mid = np.einsum("kc,kc->k", d_mat[node_i], e)
        go_left = (np.sign(g_mid) == np.sign(g_a)) | (g_mid == 0.0)
        a = np.where(go_left, mid, a)
        b = np.where(go_left, b, mid)
        g_a = np.where(go_left, g_mid, g_a)
    roots = 0.5 * (a + b)

    order_idx = np.lexsort((roots, node_i))
    node_sorted = node_i[order_idx]
    roots_sorted = roots[order_idx]
    roots_per_node: list[list[float]] = [[] for _ in range(n_nodes)]
    for k in range(len(node_sorted)):
        roots_per_node[node_sorted[k]].append(roots_sorted[k])

    first_nonzero = np.zeros(n_nodes)
    has_nz = (sgn != 0).any(axis=1)
    if np.any(has_nz):
        first_pos = np.argmax(sgn != 0, axis=1)
        first_nonzero[has_nz] = sgn[np.arange(n_nodes), first_pos][has_nz]

    slice_vals = np.zeros(n_nodes)
    for node in range(n_nodes):
        seg_sign = first_nonzero[node]
        if seg_sign == 0.0:
            continue  # density numerically zero across the window
        cuts = [-math.inf] + roots_per_node[node] + [math.inf]
        acc = 0.0
        for k in range(len(cuts) - 1):
            if seg_sign < 0.0:
                acc += float(np.sum(d_mat[node] * (
                    normal_cdf((cuts[k + 1] - cond_mean[node]) / s_cond)
                    - normal_cdf((cuts[k] - cond_mean[node]) / s_cond)
                )))
            seg_sign = -seg_sign
        slice_vals[node] = acc

    pe = p.pi1 + float(np.dot(w_z1, slice_vals))
    return min(max(pe, 0.0), 1.0)
