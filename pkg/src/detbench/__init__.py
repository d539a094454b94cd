"""detbench: Bayes-error workbench for distributed detection over noisy links.

Compares three reporting strategies for a binary hypothesis sensed through
Gaussian noise and reported over Gaussian channels under a common transmit
power budget: raw forwarding (UDD), coded two-level reporting with fixed
antipodal amplitudes (CDD) and free two-level reporting (QDD). Provides
exact evaluators for one and two sensors (independent or correlated
channels), a power-constrained rule optimizer, error-exponent asymptotics
and a seeded Monte Carlo oracle, plus a CLI that sweeps scenarios into CSV
files and figures.
"""

from .numerics import (
    Grid2D,
    IntegrationConvergenceError,
    Mixture1D,
    Mixture2D,
    NoSignChangeError,
    bisect_root,
    integrate_1d,
    integrate_2d,
    mixture_logpdf_1d,
    mixture_logpdf_2d,
    mixture_pdf_1d,
    mixture_pdf_2d,
    normal_cdf,
    q_function,
)
from .sensor import (
    DegenerateRuleError,
    InfeasibleLevelError,
    Prior,
    RatePair,
    SensingModel,
    SensorRule,
    qdd_energy,
    sensor_rates,
    solve_m1_under_power,
    transmit_probs,
    udd_energy,
)
from .fusion_one import (
    DegenerateRatesError,
    EvalResult,
    FcRegime,
    MODE_CHANNEL_BLIND,
    MODE_SEARCHED,
    REGIME_ALWAYS_H0,
    REGIME_ALWAYS_H1,
    REGIME_THRESHOLD,
    cdd_one_sensor_pe,
    channel_blind_threshold,
    classify_fc_regime,
    equal_prior_closed_pe,
    gaussian_fc_threshold,
    one_sensor_pe,
    pe_for_fc_threshold,
    two_level_fc_pe,
)
from .fusion_multi import (
    ConsistencyError,
    CorrelatedChannel,
    GridCoverageError,
    IndependentChannel,
    SystemSpec,
    default_grid_2d,
    fc_density_correlated,
    fc_density_independent,
    lrt_bayes_error_1d,
    lrt_bayes_error_2d,
    lrt_bayes_error_2d_slices,
    two_sensor_pe_independent,
    udd_pe_correlated,
    udd_pe_independent,
)
from .optimize import (
    LrqDominanceReport,
    OptimProblem,
    OptimResult,
    SYSTEM_CDD,
    SYSTEM_QDD,
    evaluate_rules_pe,
    optimize_cdd,
    optimize_qdd,
    verify_lrq_dominance,
)
from .asymptotics import (
    BoundaryCurve,
    REGIME_ASYMPTOTIC,
    REGIME_ONE_SENSOR,
    boundary_curve,
    chernoff_gaussian,
    chernoff_mixture_half,
    quantized_advantage,
)
from .montecarlo import McConfig, McEstimate, simulate_pe, simulate_pe_correlated

__version__ = "0.1.0"
