"""Experiment configs, presets, sweep engine and CSV/summary emission.

A config is a flat JSON object (see ``CONFIG_KEYS``); CLI flags override
file keys, and presets provide complete ready-to-run scenarios. Sweeps walk
the channel-noise axis, optimizing the requested systems at each point and
warm-starting each point from the previous optimum. Every CSV starts with a
single '#' header line carrying the schema version and the full config for
provenance; numbers are written with 12 significant digits and missing
values as empty fields. Row failures are recorded in the row's ``error``
column without aborting the sweep.

Exit codes: 0 success, 1 config error, 2 numerical-validation failure,
3 partial sweep failures present.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, asdict
from pathlib import Path

from .asymptotics import (
    REGIME_ASYMPTOTIC,
    REGIME_ONE_SENSOR,
    boundary_curve,
    chernoff_gaussian,
    chernoff_mixture_half,
    _qdd_symmetric_densities,
)
from .fusion_multi import (
    CorrelatedChannel,
    IndependentChannel,
    SystemSpec,
    fc_density_correlated,
    lrt_bayes_error_2d_slices,
    two_sensor_pe_independent,
    udd_pe_correlated,
    udd_pe_independent,
)
from .fusion_one import one_sensor_pe
from .optimize import (
    OptimProblem,
    OptimResult,
    SYSTEM_CDD,
    SYSTEM_QDD,
    optimize_cdd,
    optimize_qdd,
)
from .sensor import Prior, SensingModel, SensorRule

CSV_SCHEMA = 1

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_VALIDATION_FAILURE = 2
EXIT_PARTIAL_FAILURES = 3


class ConfigError(ValueError):
    """Malformed experiment configuration; message names the offending key."""


@dataclass
class ExperimentConfig:
    """Flat experiment description; see ``CONFIG_KEYS`` for the schema."""

    kind: str = "sweep"
    systems: tuple[str, ...] = ("UDD", "CDD", "QDD")
    pi1: float = 0.5
    mu: float = 1.0
    sigma_s: float = 1.5
    n_sensors: int = 1
    channel: str = "independent"          # independent | correlated
    rho: float = 0.0
    rho_values: tuple[float, ...] = ()    # non-empty: one CSV per value
    sigma_c: float = 1.0                  # eval / optimize point
    sweep_start: float = 0.2
    sweep_stop: float = 4.0
    sweep_step: float = 0.2
    sigma_s_start: float = 0.05           # boundary / chernoff axis
    sigma_s_stop: float = 3.0
    sigma_s_step: float = 0.05
    bracket_lo: float = 0.05
    bracket_hi: float = 6.0
    tie_rules: bool = False
    rules: tuple[dict, ...] = ()          # eval kind: explicit rule parameters
    starts: int = 16
    seed: int = 0
    grid: int = 801
    trials: int = 100_000
    out: str = "results/experiment.csv"
    figures: bool = True
    preset: str = ""

    def prior(self) -> Prior:
        return Prior.from_pi1(self.pi1)

    def sensing(self) -> SensingModel:
        return SensingModel(mu=self.mu, sigma_s=self.sigma_s)


CONFIG_KEYS = set(ExperimentConfig.__dataclass_fields__)

_VALID_KINDS = ("eval", "optimize", "sweep", "boundary", "chernoff", "validate")
_VALID_SYSTEMS = ("UDD", "CDD", "QDD")


PRESETS: dict[str, dict] = {
    # one sensor, unequal priors: error curves and the rule-parameter view
    "fig3": dict(kind="sweep", systems=("UDD", "CDD", "QDD"), pi1=0.7, mu=1.0,
                 sigma_s=1.5, n_sensors=1, channel="independent",
                 sweep_start=0.2, sweep_stop=4.0, sweep_step=0.2),
    "fig4": dict(kind="sweep", systems=("QDD",), pi1=0.7, mu=1.0,
                 sigma_s=1.5, n_sensors=1, channel="independent",
                 sweep_start=0.2, sweep_stop=4.0, sweep_step=0.2),
    # two i.i.d. sensors, unequal priors
    "fig5": dict(kind="sweep", systems=("UDD", "CDD", "QDD"), pi1=0.75, mu=1.0,
                 sigma_s=1.2, n_sensors=2, channel="independent", tie_rules=True,
                 sweep_start=0.1, sweep_stop=2.85, sweep_step=0.25),
    "fig6": dict(kind="sweep", systems=("CDD", "QDD"), pi1=0.75, mu=1.0,
                 sigma_s=1.2, n_sensors=2, channel="independent", tie_rules=True,
                 sweep_start=0.1, sweep_stop=2.85, sweep_step=0.25),
    # two sensors over correlated channels, equal priors, three correlations
    "fig7": dict(kind="sweep", systems=("UDD", "CDD", "QDD"), pi1=0.5, mu=1.0,
                 sigma_s=1.5, n_sensors=2, channel="correlated",
                 rho_values=(0.0, 0.5, 0.9), starts=10,
                 sweep_start=0.2, sweep_stop=3.0, sweep_step=0.4),
    # equal-performance boundaries on the (sigma_s, sigma_c) plane
    "fig8": dict(kind="boundary", pi1=0.5, mu=1.0,
                 sigma_s_start=0.05, sigma_s_stop=3.0, sigma_s_step=0.05,
                 bracket_lo=0.05, bracket_hi=6.0),
}


def config_from_dict(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base if base is not None else ExperimentConfig()
    for key, value in data.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if key in ("systems", "rho_values", "rules"):
            value = tuple(value)
        setattr(cfg, key, value)
    if cfg.kind not in _VALID_KINDS:
        raise ConfigError(f"kind must be one of {_VALID_KINDS}, got {cfg.kind!r}")
    for sysname in cfg.systems:
        if sysname not in _VALID_SYSTEMS:
            raise ConfigError(f"unknown system kind {sysname!r}")
    if cfg.channel not in ("independent", "correlated"):
        raise ConfigError(f"channel must be independent or correlated, got {cfg.channel!r}")
    if cfg.n_sensors not in (1, 2):
        raise ConfigError(f"n_sensors must be 1 or 2, got {cfg.n_sensors}")
    if cfg.kind == "sweep":
        if not (cfg.sweep_step > 0.0 and cfg.sweep_stop >= cfg.sweep_start):
            raise ConfigError("sweep range is empty or step is not positive")
    return cfg


def load_config_file(path: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: top level must be a JSON object")
    return config_from_dict(data, base)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.12g}"
    return str(value)


def write_csv(path: Path, columns: list[str], rows: list[dict], cfg: ExperimentConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    echo = json.dumps(asdict(cfg), separators=(",", ":"), default=list)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# detbench-csv schema={CSV_SCHEMA} kind={cfg.kind} config={echo}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(col)) for col in columns) + "\n")


def write_summary(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _sweep_values(cfg: ExperimentConfig) -> list[float]:
    n = int(math.floor((cfg.sweep_stop - cfg.sweep_start) / cfg.sweep_step + 1e-9)) + 1
    return [cfg.sweep_start + i * cfg.sweep_step for i in range(n)]


def _make_channel(cfg: ExperimentConfig, sigma_c: float, rho: float):
    if cfg.channel == "correlated":
        return CorrelatedChannel(rho=rho, sigma_c1=sigma_c, sigma_c2=sigma_c)
    return IndependentChannel(sigma_c=(sigma_c,) * cfg.n_sensors)


def _udd_pe(cfg: ExperimentConfig, sigma_c: float, rho: float) -> float:
    p = cfg.prior()
    s = cfg.sensing()
    if cfg.channel == "correlated":
        ch = CorrelatedChannel(rho=rho, sigma_c1=sigma_c, sigma_c2=sigma_c)
        return udd_pe_correlated(p, s, s, ch, cross_check=False)
    return udd_pe_independent(cfg.n_sensors, p, s, sigma_c)


def _rule_columns(sysname: str, n_sensors: int) -> list[str]:
    cols = []
    for k in range(1, n_sensors + 1):
        cols += [f"{sysname.lower()}_t{k}", f"{sysname.lower()}_m0_{k}", f"{sysname.lower()}_m1_{k}"]
    if n_sensors == 1:
        cols.append(f"{sysname.lower()}_t_z")
    return cols


def sweep_columns(cfg: ExperimentConfig) -> list[str]:
    cols = ["sigma_c"]
    if "UDD" in cfg.systems:
        cols += ["udd_pe", "udd_t_z"]
    for sysname in ("CDD", "QDD"):
        if sysname in cfg.systems:
            cols += [f"{sysname.lower()}_pe"] + _rule_columns(sysname, cfg.n_sensors)
            cols += [f"{sysname.lower()}_starts", f"{sysname.lower()}_converged"]
    cols.append("error")
    return cols


def _record_rules(row: dict, sysname: str, cfg: ExperimentConfig, result: OptimResult,
                  sigma_c: float) -> None:
    low = sysname.lower()
    row[f"{low}_pe"] = result.pe
    row[f"{low}_starts"] = result.starts_used
    row[f"{low}_converged"] = result.converged
    for k, rule in enumerate(result.rules, start=1):
        row[f"{low}_t{k}"] = rule.t
        row[f"{low}_m0_{k}"] = rule.m0
        row[f"{low}_m1_{k}"] = rule.m1
    if cfg.n_sensors == 1:
        res = one_sensor_pe(result.rules[0], cfg.prior(), cfg.sensing(), sigma_c)
        row[f"{low}_t_z"] = res.regime.t_z if res.regime.t_z is not None else None


def run_sweep_for_rho(cfg: ExperimentConfig, rho: float):
    """One sweep over sigma_c at a fixed correlation; returns (rows, failures)."""
    p = cfg.prior()
    s = cfg.sensing()
    rows: list[dict] = []
    failures = 0
    warm: dict[str, tuple[SensorRule, ...]] = {}
    for sigma_c in _sweep_values(cfg):
        row: dict = {"sigma_c": sigma_c}
        try:
            if "UDD" in cfg.systems:
                row["udd_pe"] = _udd_pe(cfg, sigma_c, rho)
                var = s.sigma_s**2 + sigma_c**2
                row["udd_t_z"] = var / (2.0 * s.mu) * math.log(p.eta)
            channel = _make_channel(cfg, sigma_c, rho)
            for sysname, runner in (("CDD", optimize_cdd), ("QDD", optimize_qdd)):
                if sysname not in cfg.systems:
                    continue
                problem = OptimProblem(
                    prior=p, sensors=(s,) * cfg.n_sensors, channel=channel,
                    system=SYSTEM_CDD if sysname == "CDD" else SYSTEM_QDD,
                    tie_rules=cfg.tie_rules,
                )
                result = runner(problem, starts=cfg.starts, seed=cfg.seed,
                                warm_start=warm.get(sysname))
                warm[sysname] = result.rules
                _record_rules(row, sysname, cfg, result, sigma_c)
        except Exception as exc:
            row["error"] = str(exc).replace(",", ";")
            failures += 1
        rows.append(row)
    return rows, failures


def _rho_tagged_path(out: Path, rho: float) -> Path:
    tag = f"_rho{rho:g}".replace(".", "p")
    return out.with_name(out.stem + tag + out.suffix)


def run_sweep(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    rho_list = list(cfg.rho_values) if cfg.rho_values else [cfg.rho]
    columns = sweep_columns(cfg)
    total_failures = 0
    written: list[tuple[Path, list[dict], float]] = []
    started = time.time()
    for rho in rho_list:
        rows, failures = run_sweep_for_rho(cfg, rho)
        total_failures += failures
        path = _rho_tagged_path(out, rho) if len(rho_list) > 1 else out
        write_csv(path, columns, rows, cfg)
        written.append((path, rows, rho))

    lines = [f"sweep: systems={','.join(cfg.systems)} pi1={cfg.pi1} mu={cfg.mu} "
             f"sigma_s={cfg.sigma_s} sensors={cfg.n_sensors} channel={cfg.channel}",
             f"elapsed: {time.time() - started:.1f} s"]
    for path, rows, rho in written:
        lines.append(f"file: {path} (rho={rho:g}, {len(rows)} rows)")
        for row in rows:
            pes = {k: v for k, v in row.items() if k.endswith("_pe")}
            if pes:
                best = min(pes, key=pes.get)
                lines.append(f"  sigma_c={row['sigma_c']:g}: " +
                             " ".join(f"{k}={_fmt(v)}" for k, v in pes.items()) +
                             f" best={best[:-3].upper()}")
            if row.get("error"):
                lines.append(f"  sigma_c={row['sigma_c']:g}: FAILED: {row['error']}")
    write_summary(out.with_suffix(".summary.txt"), lines)

    if cfg.figures:
        from . import figures
        for path, rows, rho in written:
            figures.render_sweep(path, columns, rows, cfg, rho)
    return EXIT_PARTIAL_FAILURES if total_failures else EXIT_OK


def emit_boundary(cfg: ExperimentConfig) -> int:
    """Both equal-performance curves to one CSV, no-crossing points flagged."""
    out = Path(cfg.out)
    p = cfg.prior()
    n = max(0, int(round((cfg.sigma_s_stop - cfg.sigma_s_start) / cfg.sigma_s_step)) + 1)
    grid = [cfg.sigma_s_start + i * cfg.sigma_s_step for i in range(n)]
    columns = ["regime", "sigma_s", "sigma_c_star", "crossed"]
    rows: list[dict] = []
    curves = {}
    started = time.time()
    for regime in (REGIME_ONE_SENSOR, REGIME_ASYMPTOTIC):
        curve = boundary_curve(regime, p, cfg.mu, grid,
                               search_bracket=(cfg.bracket_lo, cfg.bracket_hi))
        curves[regime] = curve
        stars = dict(curve.points)
        for sigma_s in grid:
            if sigma_s in stars:
                rows.append({"regime": regime, "sigma_s": sigma_s,
                             "sigma_c_star": stars[sigma_s], "crossed": True})
            else:
                rows.append({"regime": regime, "sigma_s": sigma_s,
                             "sigma_c_star": None, "crossed": False})
    write_csv(out, columns, rows, cfg)
    lines = [f"boundary curves over sigma_s in [{cfg.sigma_s_start}, {cfg.sigma_s_stop}], "
             f"bracket sigma_c in [{cfg.bracket_lo}, {cfg.bracket_hi}]"]
    for regime, curve in curves.items():
        if curve.points:
            smin = min(sc for _, sc in curve.points)
            smax_s = max(ss for ss, _ in curve.points)
            lines.append(f"{regime}: {len(curve.points)} crossings, min sigma_c*={smin:.4f}, "
                         f"largest sigma_s with crossing={smax_s:g}")
        else:
            lines.append(f"{regime}: no crossings found")
    lines.append(f"elapsed: {time.time() - started:.1f} s")
    write_summary(out.with_suffix(".summary.txt"), lines)
    if cfg.figures:
        from . import figures
        figures.render_boundary(out, rows, cfg)
    return EXIT_OK


def run_chernoff(cfg: ExperimentConfig) -> int:
    """Chernoff informations (nats) of both systems over a noise grid."""
    out = Path(cfg.out)
    n = max(0, int(round((cfg.sigma_s_stop - cfg.sigma_s_start) / cfg.sigma_s_step)) + 1)
    s_grid = [cfg.sigma_s_start + i * cfg.sigma_s_step for i in range(n)]
    m = max(0, int(math.floor((cfg.sweep_stop - cfg.sweep_start) / cfg.sweep_step + 1e-9)) + 1)
    c_grid = [cfg.sweep_start + i * cfg.sweep_step for i in range(m)]
    columns = ["sigma_s", "sigma_c", "chernoff_udd_nats", "chernoff_qdd_nats", "qdd_advantage"]
    rows = []
    for sigma_s in s_grid:
        for sigma_c in c_grid:
            c_u = chernoff_gaussian(cfg.mu, math.hypot(sigma_s, sigma_c))
            f1, f0 = _qdd_symmetric_densities(cfg.mu, sigma_s, sigma_c)
            c_q = chernoff_mixture_half(f1, f0)
            rows.append({"sigma_s": sigma_s, "sigma_c": sigma_c,
                         "chernoff_udd_nats": c_u, "chernoff_qdd_nats": c_q,
                         "qdd_advantage": c_q - c_u})
    write_csv(out, columns, rows, cfg)
    write_summary(out.with_suffix(".summary.txt"),
                  [f"chernoff grid: {len(s_grid)} x {len(c_grid)} points (values in nats)"])
    if cfg.figures:
        from . import figures
        figures.render_chernoff(out, rows, cfg)
    return EXIT_OK


def _parse_rule(entry, k: int) -> SensorRule | None:
    if entry in ("udd", "raw", None):
        return None
    try:
        return SensorRule(t=float(entry["t"]), m0=float(entry["m0"]), m1=float(entry["m1"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"rules[{k}]: expected 'udd' or an object with t, m0, m1") from exc


def run_eval(cfg: ExperimentConfig) -> int:
    """Evaluate the Bayes error of explicitly given rules at one channel point."""
    out = Path(cfg.out)
    p = cfg.prior()
    s = cfg.sensing()
    if cfg.rules:
        rules = [_parse_rule(entry, k) for k, entry in enumerate(cfg.rules)]
        if len(rules) != cfg.n_sensors:
            raise ConfigError(f"rules: expected {cfg.n_sensors} entries, got {len(rules)}")
    else:
        rules = [None] * cfg.n_sensors
    channel = _make_channel(cfg, cfg.sigma_c, cfg.rho)
    spec = SystemSpec(prior=p, sensors=tuple((s, r) for r in rules), channel=channel)
    if cfg.n_sensors == 1:
        if rules[0] is None:
            pe = udd_pe_independent(1, p, s, cfg.sigma_c)
        else:
            pe = one_sensor_pe(rules[0], p, s, cfg.sigma_c).pe
    elif cfg.channel == "correlated":
        if all(r is None for r in rules):
            pe = udd_pe_correlated(p, s, s, channel, cross_check=False)
        else:
            f0, f1 = fc_density_correlated(spec)
            pe = lrt_bayes_error_2d_slices(f1, f0, p)
    else:
        if all(r is None for r in rules):
            pe = udd_pe_independent(2, p, s, cfg.sigma_c)
        else:
            pe = two_sensor_pe_independent(spec)
    columns = ["sigma_c", "pe"]
    row = {"sigma_c": cfg.sigma_c, "pe": pe}
    for k, rule in enumerate(rules, start=1):
        columns += [f"t{k}", f"m0_{k}", f"m1_{k}"]
        if rule is not None:
            row[f"t{k}"] = rule.t
            row[f"m0_{k}"] = rule.m0
            row[f"m1_{k}"] = rule.m1
    write_csv(out, columns, [row], cfg)
    write_summary(out.with_suffix(".summary.txt"), [f"eval: pe = {pe:.12g}"])
    return EXIT_OK


def run_optimize(cfg: ExperimentConfig) -> int:
    """Optimize the requested systems at a single channel point."""
    out = Path(cfg.out)
    p = cfg.prior()
    s = cfg.sensing()
    channel = _make_channel(cfg, cfg.sigma_c, cfg.rho)
    columns = ["sigma_c"]
    row: dict = {"sigma_c": cfg.sigma_c}
    lines = [f"optimize at sigma_c={cfg.sigma_c:g}"]
    if "UDD" in cfg.systems:
        columns += ["udd_pe"]
        row["udd_pe"] = _udd_pe(cfg, cfg.sigma_c, cfg.rho)
        lines.append(f"UDD : pe={row['udd_pe']:.9g} (no free parameters)")
    for sysname, runner in (("CDD", optimize_cdd), ("QDD", optimize_qdd)):
        if sysname not in cfg.systems:
            continue
        problem = OptimProblem(prior=p, sensors=(s,) * cfg.n_sensors, channel=channel,
                               system=SYSTEM_CDD if sysname == "CDD" else SYSTEM_QDD,
                               tie_rules=cfg.tie_rules)
        result = runner(problem, starts=cfg.starts, seed=cfg.seed)
        columns += [f"{sysname.lower()}_pe"] + _rule_columns(sysname, cfg.n_sensors)
        columns += [f"{sysname.lower()}_starts", f"{sysname.lower()}_converged"]
        _record_rules(row, sysname, cfg, result, cfg.sigma_c)
        rules_txt = "  ".join(
            f"t={r.t:.6g} m0={r.m0:.6g} m1={r.m1:.6g}" for r in result.rules)
        lines.append(f"{sysname}: pe={result.pe:.9g}  {rules_txt}")
    write_csv(out, columns, [row], cfg)
    write_summary(out.with_suffix(".summary.txt"), lines)
    return EXIT_OK


def run_validate(cfg: ExperimentConfig) -> int:
    from . import validation

    results = validation.run_all()
    passed = sum(1 for r in results if r.passed)
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    lines.append(f"{passed}/{len(results)} checks passed")
    for line in lines:
        print(line)
    if cfg.out:
        write_summary(Path(cfg.out).with_suffix(".summary.txt"), lines)
    return EXIT_OK if passed == len(results) else EXIT_VALIDATION_FAILURE


def run_experiment(cfg: ExperimentConfig) -> int:
    """Dispatch a parsed config; returns the process exit status."""
    if cfg.kind == "sweep":
        return run_sweep(cfg)
    if cfg.kind == "boundary":
        return emit_boundary(cfg)
    if cfg.kind == "chernoff":
        return run_chernoff(cfg)
    if cfg.kind == "eval":
        return run_eval(cfg)
    if cfg.kind == "optimize":
        return run_optimize(cfg)
    if cfg.kind == "validate":
        return run_validate(cfg)
    raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
