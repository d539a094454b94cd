"""Command line front end.

Subcommands: eval | optimize | sweep | boundary | chernoff | validate.
Configuration precedence, lowest to highest: built-in defaults, --preset,
--config file, explicit flags. Exit codes: 0 success, 1 config error,
2 numerical-validation failure, 3 partial sweep failures.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    EXIT_CONFIG_ERROR,
    ConfigError,
    ExperimentConfig,
    PRESETS,
    config_from_dict,
    load_config_file,
    run_experiment,
)


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH", help="JSON config file (keys as in the README)")
    sub.add_argument("--preset", choices=sorted(PRESETS), help="named scenario preset")
    sub.add_argument("--out", metavar="PATH", help="output CSV path")
    sub.add_argument("--seed", type=int, help="optimizer / simulation seed")
    sub.add_argument("--grid", type=int, help="tensor-grid points per axis")
    sub.add_argument("--starts", type=int, help="multi-start count for optimization")
    sub.add_argument("--trials", type=int, help="Monte Carlo trial count")
    sub.add_argument("--pi1", type=float, help="prior probability of H1")
    sub.add_argument("--mu", type=float, help="signal amplitude")
    sub.add_argument("--sigma-s", type=float, dest="sigma_s", help="sensing noise std")
    sub.add_argument("--sigma-c", type=float, dest="sigma_c", help="channel noise std (point kinds)")
    sub.add_argument("--rho", type=float, help="channel correlation (correlated channel)")
    sub.add_argument("--sensors", type=int, dest="n_sensors", help="sensor count (1 or 2)")
    sub.add_argument("--systems", help="comma separated subset of UDD,CDD,QDD")
    sub.add_argument("--tie-rules", action="store_true", dest="tie_rules", default=None,
                     help="force identical rules across sensors")
    sub.add_argument("--no-figures", action="store_false", dest="figures", default=None,
                     help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detbench",
        description="Bayes-error workbench for distributed detection over noisy channels",
    )
    subparsers = parser.add_subparsers(dest="kind", required=True)
    descriptions = {
        "eval": "evaluate explicitly given sensor rules at one channel point",
        "optimize": "optimize sensor rules at one channel point",
        "sweep": "sweep the channel noise axis, optimizing each system per point",
        "boundary": "trace UDD/QDD equal-performance curves on the noise plane",
        "chernoff": "tabulate error exponents over a noise grid",
        "validate": "run the built-in numerical invariant checks",
    }
    for kind, desc in descriptions.items():
        sub = subparsers.add_parser(kind, help=desc, description=desc)
        _add_common_flags(sub)
    return parser


def _flag_overrides(args: argparse.Namespace) -> dict:
    keys = ("out", "seed", "grid", "starts", "trials", "pi1", "mu", "sigma_s",
            "sigma_c", "rho", "n_sensors", "tie_rules", "figures")
    overrides = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if getattr(args, "systems", None):
        overrides["systems"] = tuple(s.strip().upper() for s in args.systems.split(",") if s.strip())
    return overrides


def _default_out(cfg: ExperimentConfig, args: argparse.Namespace) -> str:
    stem = args.preset if getattr(args, "preset", None) else cfg.kind
    return f"results/{stem}.csv"


def parse_args_to_config(argv: list[str] | None = None) -> ExperimentConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = ExperimentConfig()
    cfg.kind = args.kind
    if args.preset:
        cfg = config_from_dict(dict(PRESETS[args.preset]), cfg)
        cfg.preset = args.preset
        # a preset fixes the scenario, not the command the user asked for
        if args.kind != cfg.kind and args.kind in ("sweep", "boundary", "chernoff", "optimize", "eval"):
            cfg.kind = args.kind
    if args.config:
        cfg = load_config_file(args.config, cfg)
    cfg = config_from_dict(_flag_overrides(args), cfg)
    if not getattr(args, "out", None) and cfg.out == ExperimentConfig().out:
        cfg.out = _default_out(cfg, args)
    return cfg


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_args_to_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SystemExit as exc:  # argparse error paths
        return EXIT_CONFIG_ERROR if exc.code not in (0, None) else 0
    try:
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
