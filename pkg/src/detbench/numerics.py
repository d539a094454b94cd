"""Scalar probability primitives, Gaussian mixtures, quadrature and root finding.

Everything in this module is deterministic and free of shared mutable state,
so concurrent use needs no coordination. Conventions used throughout:

* ``q_function`` is the standard normal upper tail, computed through erfc.
* 1-D integration is adaptive 15-point Gauss-Kronrod bisection with an
  absolute tolerance (default 1e-10).
* 2-D integration is a fixed tensor-product rule on a rectangular grid
  (composite Simpson per axis for odd point counts, trapezoid otherwise).
  Integrands must accept numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: tolerance on "mixture weights sum to one"
WEIGHT_SUM_TOL = 1e-12


class IntegrationConvergenceError(RuntimeError):
    """Adaptive refinement hit its depth limit before meeting the tolerance.

    The best available estimate is attached as ``estimate`` and the unmet
    error bound as ``error_bound``.
    """

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class NoSignChangeError(ValueError):
    """Bracket endpoints passed to ``bisect_root`` have the same sign."""


def q_function(u):
    """Standard normal upper-tail probability Q(u) = P(N(0,1) > u).

    Accepts a scalar or ndarray; +/-inf map to 0/1 exactly. NaN is a domain
    error. Absolute accuracy is that of erfc, well below 1e-12.
    """
    arr = np.asarray(u, dtype=float)
    if np.isnan(arr).any():
        raise ValueError("q_function: NaN input")
    out = 0.5 * special.erfc(arr / _SQRT2)
    if np.ndim(u) == 0:
        return float(out)
    return out


def normal_cdf(u):
    """Standard normal lower-tail probability, the complement of q_function."""
    arr = np.asarray(u, dtype=float)
    if np.isnan(arr).any():
        raise ValueError("normal_cdf: NaN input")
    out = special.ndtr(arr)
    if np.ndim(u) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Mixture1D:
    """Finite Gaussian mixture on the real line.

    ``components`` is a sequence of (weight, mean, sigma) triples. Weights are
    probabilities summing to one; zero weights are allowed so that degenerate
    constructions (for example a never-used transmit level) keep a fixed
    component layout.
    """

    components: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        comps = tuple((float(w), float(m), float(s)) for w, m, s in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("Mixture1D: component list is empty")
        wsum = 0.0
        for w, m, s in comps:
            if not (w >= 0.0):
                raise ValueError(f"Mixture1D: negative weight {w}")
            if not (s > 0.0) or not math.isfinite(s):
                raise ValueError(f"Mixture1D: sigma must be positive, got {s}")
            if not math.isfinite(m):
                raise ValueError(f"Mixture1D: non-finite mean {m}")
            wsum += w
        if abs(wsum - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"Mixture1D: weights sum to {wsum}, expected 1")

    @property
    def weights(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c[1] for c in self.components])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([c[2] for c in self.components])

    def support_hull(self, span: float = 8.0, weight_floor: float = 1e-13):
        """(lo, hi) covering every non-negligible component mean +- span*sigma."""
        lo = math.inf
        hi = -math.inf
        smax = 0.0
        for w, m, s in self.components:
            if w < weight_floor:
                continue
            lo = min(lo, m)
            hi = max(hi, m)
            smax = max(smax, s)
        if not math.isfinite(lo):  # all weights negligible; fall back to all comps
            lo = min(c[1] for c in self.components)
            hi = max(c[1] for c in self.components)
            smax = max(c[2] for c in self.components)
        return lo - span * smax, hi + span * smax


@dataclass(frozen=True)
class Mixture2D:
    """Bivariate Gaussian mixture with one covariance shared by all components.

    ``components`` holds (weight, mean1, mean2); the shared covariance is
    given by per-axis standard deviations and the correlation ``rho``.
    """

    components: tuple[tuple[float, float, float], ...]
    sigma1: float
    sigma2: float
    rho: float

    def __post_init__(self):
        comps = tuple((float(w), float(a), float(b)) for w, a, b in self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "sigma1", float(self.sigma1))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "rho", float(self.rho))
        if not comps:
            raise ValueError("Mixture2D: component list is empty")
        if not (self.sigma1 > 0.0 and self.sigma2 > 0.0):
            raise ValueError("Mixture2D: sigmas must be positive")
        if not (abs(self.rho) < 1.0):
            raise ValueError(f"Mixture2D: |rho| must be < 1, got {self.rho}")
        wsum = 0.0
        for w, a, b in comps:
            if not (w >= 0.0):
                raise ValueError(f"Mixture2D: negative weight {w}")
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError("Mixture2D: non-finite mean")
            wsum += w
        if abs(wsum - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"Mixture2D: weights sum to {wsum}, expected 1")

    @property
    def weights(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([(c[1], c[2]) for c in self.components])


@dataclass(frozen=True)
class Grid2D:
    """Rectangular tensor grid for the fixed 2-D quadrature rule."""

    x_lo: float
    x_hi: float
    nx: int
    y_lo: float
    y_hi: float
    ny: int

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError("Grid2D: lower bound must be below upper bound on both axes")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("Grid2D: need at least 2 points per axis")

    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    def y_nodes(self) -> np.ndarray:
        return np.linspace(self.y_lo, self.y_hi, self.ny)


def mixture_pdf_1d(m: Mixture1D, z):
    """Density of a 1-D Gaussian mixture, vectorized over ``z``."""
    zz = np.asarray(z, dtype=float)[..., None]
    w = m.weights
    mu = m.means
    sig = m.sigmas
    vals = np.sum(w * np.exp(-0.5 * ((zz - mu) / sig) ** 2) / (math.sqrt(2 * math.pi) * sig), axis=-1)
    if np.ndim(z) == 0:
        return float(vals)
    return vals


def mixture_logpdf_1d(m: Mixture1D, z):
    """Log-density of a 1-D Gaussian mixture (stable in the far tails)."""
    zz = np.asarray(z, dtype=float)[..., None]
    w = m.weights
    with np.errstate(divide="ignore"):
        logw = np.where(w > 0, np.log(np.maximum(w, 1e-320)), -np.inf)
    terms = logw - 0.5 * ((zz - m.means) / m.sigmas) ** 2 - np.log(m.sigmas) - _LOG_SQRT_2PI
    out = special.logsumexp(terms, axis=-1)
    if np.ndim(z) == 0:
        return float(out)
    return out


def _bivariate_quad_form(m: Mixture2D, z1, z2):
    """Per-component standardized quadratic form, shape (..., n_components)."""
    a = (np.asarray(z1, dtype=float)[..., None] - m.means[:, 0]) / m.sigma1
    b = (np.asarray(z2, dtype=float)[..., None] - m.means[:, 1]) / m.sigma2
    return (a * a - 2.0 * m.rho * a * b + b * b) / (1.0 - m.rho**2)


def mixture_pdf_2d(m: Mixture2D, z1, z2):
    """Density of a shared-covariance bivariate Gaussian mixture."""
    norm = 1.0 / (2.0 * math.pi * m.sigma1 * m.sigma2 * math.sqrt(1.0 - m.rho**2))
    q = _bivariate_quad_form(m, z1, z2)
    vals = norm * np.sum(m.weights * np.exp(-0.5 * q), axis=-1)
    if np.ndim(z1) == 0 and np.ndim(z2) == 0:
        return float(vals)
    return vals


def mixture_logpdf_2d(m: Mixture2D, z1, z2):
    """Log-density counterpart of ``mixture_pdf_2d``."""
    w = m.weights
    with np.errstate(divide="ignore"):
        logw = np.where(w > 0, np.log(np.maximum(w, 1e-320)), -np.inf)
    lognorm = -math.log(2.0 * math.pi * m.sigma1 * m.sigma2 * math.sqrt(1.0 - m.rho**2))
    q = _bivariate_quad_form(m, z1, z2)
    out = special.logsumexp(logw + lognorm - 0.5 * q, axis=-1)
    if np.ndim(z1) == 0 and np.ndim(z2) == 0:
        return float(out)
    return out


# 15-point Kronrod extension of 7-point Gauss (standard published constants).
_XGK = np.array([
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0,
])
_WGK = np.array([
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278,
])
_WG = np.array([
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694,
])

_GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # ascending, 15 nodes
_GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_WEIGHTS = np.zeros(15)
_G_WEIGHTS[1:14:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, lo: float, hi: float):
    half = 0.5 * (hi - lo)
    center = 0.5 * (lo + hi)
    fx = np.asarray(f(center + half * _GK_NODES), dtype=float)
    kron = half * float(np.dot(_GK_WEIGHTS, fx))
    gauss = half * float(np.dot(_G_WEIGHTS, fx))
    return kron, abs(kron - gauss)


def integrate_1d(f, lo: float, hi: float, tol: float = 1e-10, max_depth: int = 48) -> float:
    """Adaptive Gauss-Kronrod integration of ``f`` over [lo, hi].

    ``f`` must accept an ndarray of evaluation points and return finite
    values. Subintervals are bisected until the local Kronrod/Gauss error
    estimate fits within a proportional share of ``tol``. If some interval
    still fails at ``max_depth``, an IntegrationConvergenceError carrying the
    best full-range estimate is raised.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("integrate_1d: bounds must be finite")
    if hi == lo:
        return 0.0
    if hi < lo:
        return -integrate_1d(f, hi, lo, tol=tol, max_depth=max_depth)

    total = 0.0
    err_accepted = 0.0
    failed_err = 0.0
    stack = [(lo, hi, float(tol), 0)]
    while stack:
        a, b, tloc, depth = stack.pop()
        est, err = _gk15(f, a, b)
        # floor to avoid splitting forever on roundoff-dominated intervals
        floor = 50.0 * np.finfo(float).eps * (1.0 + abs(est))
        if err <= max(tloc, floor):
            total += est
            err_accepted += err
            continue
        if depth >= max_depth:
            total += est
            failed_err += err
            continue
        mid = 0.5 * (a + b)
        stack.append((a, mid, 0.5 * tloc, depth + 1))
        stack.append((mid, b, 0.5 * tloc, depth + 1))
    if failed_err > 0.0:
        raise IntegrationConvergenceError(
            f"integrate_1d: tolerance {tol} not met after depth {max_depth} "
            f"(unresolved error {failed_err:.3e})",
            estimate=total,
            error_bound=err_accepted + failed_err,
        )
    return total


def _axis_weights(nodes: np.ndarray) -> np.ndarray:
    """Composite Simpson weights for an odd uniform grid, trapezoid otherwise."""
    n = len(nodes)
    h = nodes[1] - nodes[0]
    if n >= 3 and n % 2 == 1:
        w = np.ones(n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (h / 3.0)
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w * h


def integrate_2d(f, grid: Grid2D) -> float:
    """Fixed tensor-product quadrature of ``f(z1, z2)`` over ``grid``.

    ``f`` is evaluated once on the full meshgrid (indexing='ij') and must
    broadcast over arrays. Deterministic for identical inputs.
    """
    x = grid.x_nodes()
    y = grid.y_nodes()
    wx = _axis_weights(x)
    wy = _axis_weights(y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals = np.asarray(f(X, Y), dtype=float)
    if vals.shape != X.shape:
        raise ValueError("integrate_2d: integrand did not broadcast over the grid")
    return float(wx @ vals @ wy)


def bisect_root(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Bisection root of a scalar function on a sign-changing bracket.

    Returns the bracket midpoint once the bracket width is <= ``tol``.
    Raises NoSignChangeError when f(lo) and f(hi) have the same sign.
    """
    if not (lo < hi):
        raise ValueError("bisect_root: need lo < hi")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise NoSignChangeError(f"bisect_root: no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        if (hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at floating point resolution
            break
        fm = f(mid)
        if fm == 0.0:
            return float(mid)
        if math.copysign(1.0, fm) == math.copysign(1.0, flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)
