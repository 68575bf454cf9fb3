"""Command line: ``python -m skapca {simulate,sweep,analytic,verify}``.

Exit status is 0 on success, 1 when an oracle check fails and 2 for a bad
configuration.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .channel import ConfigError, SystemConfig
from .configfile import load_config, parse_float_list
from .harness import AXES, METRICS, SweepSpec, Table, emit_analytics, raw_table, run_sweep, run_trials, write_csv
from .oracles import DEFAULT_SAMPLES, split_overrides, verify_oracles
from .trial import PLUG_IN_MODES

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG = 0, 1, 2
DEFAULT_TRIALS = 10_000


def _common(p: argparse.ArgumentParser, trials_help: str) -> None:
    p.add_argument("--config", help="flat key = value file; missing keys use the default setup")
    p.add_argument("--seed", type=int, help="overrides the seed in the config file")
    p.add_argument("--trials", type=int, help=trials_help)
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", help="CSV destination (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skapca", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="raw per-user trial records for one configuration")
    _common(p, "coherence blocks to simulate (default 1000)")
    p.add_argument("--plug-in", choices=PLUG_IN_MODES, default=None)

    p = sub.add_parser("sweep", help="aggregate metrics along one axis")
    _common(p, f"coherence blocks per point (default {DEFAULT_TRIALS})")
    p.add_argument("--axis", choices=AXES)
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--plug-in", choices=PLUG_IN_MODES, default=None)

    p = sub.add_parser("analytic", help="closed-form curves along one axis")
    _common(p, "ignored")
    p.add_argument("--axis", choices=AXES)
    p.add_argument("--values", help="comma-separated axis values")

    p = sub.add_parser("verify", help="run the oracle suite")
    _common(p, "Monte-Carlo sample count for the simulation-based checks")
    p.add_argument("--skip-mi", action="store_true", help="skip the slow mutual-information histogram")
    return parser


def _load(args):
    if args.config:
        return load_config(args.config, seed=args.seed)
    config = SystemConfig.default_setup()
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    return config, {}, {}


def _emit(table: Table, out) -> None:
    write_csv(table, out if out else sys.stdout)


def _axis_values(args, sweep: dict):
    axis = args.axis or sweep.get("axis")
    raw = args.values or sweep.get("values")
    if axis is None or raw is None:
        raise ConfigError("an axis and its values are required (flags or config keys)")
    if axis not in AXES:
        raise ConfigError(f"axis must be one of {AXES}, got {axis!r}")
    values = parse_float_list(raw)
    if axis in ("M", "K", "N_d"):
        if any(v != int(v) for v in values):
            raise ConfigError(f"{axis} values must be integers")
        values = tuple(int(v) for v in values)
    return axis, values


def cmd_simulate(args) -> int:
    config, sweep, _ = _load(args)
    plug_in = args.plug_in or sweep.get("plug_in", "estimated")
    trials = args.trials if args.trials is not None else int(sweep.get("trials", 1000))
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    _emit(raw_table(run_trials(config, trials, args.workers, plug_in)), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, sweep, _ = _load(args)
    axis, values = _axis_values(args, sweep)
    trials = args.trials if args.trials is not None else int(sweep.get("trials", DEFAULT_TRIALS))
    metrics = tuple(m.strip() for m in sweep.get("metrics", ",".join(METRICS)).split(",") if m.strip())
    try:
        spec = SweepSpec(config, axis, values, trials, metrics, args.plug_in or sweep.get("plug_in", "estimated"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(run_sweep(spec, args.workers), args.out)
    return EXIT_OK


def cmd_analytic(args) -> int:
    config, sweep, _ = _load(args)
    axis, values = _axis_values(args, sweep)
    _emit(emit_analytics(config, axis, values), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    config, _, extras = _load(args)
    try:
        tol, samples = split_overrides(extras)
    except ValueError as exc:
        raise ConfigError(f"bad oracle override: {exc}") from exc
    if args.trials is not None:
        for key in DEFAULT_SAMPLES:
            if key != "mi":
                samples.setdefault(key, args.trials)
    try:
        report = verify_oracles(config, tol, samples, include_mi=not args.skip_mi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    table = Table(["check", "passed", "value", "reference", "tolerance", "detail"],
                  [[c.name, c.passed, c.value, c.reference, c.tolerance, c.detail] for c in report.checks])
    _emit(table, args.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (ref {c.reference:.6g}, tol {c.tolerance:.3g})",
              file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "analytic": cmd_analytic, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
