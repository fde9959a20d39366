"""Command-line front end: ``mfsim <command> [options]``."""

from __future__ import annotations

import argparse
import sys

from .config import Scenario, parse_override, preset_names
from .output import emit_csv, write_columns, write_fields
from .runner import feedback_fields, reference, run_ensemble, sweep_points, trajectory
from .validation import SUITES, run_suites

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _scenario_args(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("--scenario", required=True, help="preset name or path to an .ini file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value; use section.key when the key is ambiguous")
    p.add_argument("--out", default="-", help="output CSV path (default: stdout)")
    p.add_argument("--no-feedback", action="store_true", help="skip the feedback unitary")
    p.add_argument("--no-measurement", action="store_true", help="bare noisy evolution")
    if seed:
        p.add_argument("--seed", type=_u64, help="master seed (default: from the scenario)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfsim", description="Measurement-feedback trajectory simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one trajectory")
    _scenario_args(p)
    p.add_argument("--index", type=int, default=0, help="trajectory index under the master seed")

    p = sub.add_parser("ensemble", help="R trajectories per sweep point, summarised")
    _scenario_args(p)
    p.add_argument("--runs", type=_positive, help="runs per sweep point (default: from the scenario)")
    p.add_argument("--workers", type=_positive, default=1, help="worker processes (output does not depend on it)")
    p.add_argument("--final-only", action="store_true", help="write only the last time sample per sweep point")

    p = sub.add_parser("reference", help="noiseless trajectory only")
    _scenario_args(p, seed=False)

    p = sub.add_parser("fields", help="feedback fields B*t_F along the reference (qubit scenarios)")
    _scenario_args(p, seed=False)

    p = sub.add_parser("validate", help="run property suites")
    p.add_argument("suites", nargs="*", metavar="SUITE", help=f"any of: {', '.join(SUITES)} (default: all)")

    p = sub.add_parser("scenario", help="inspect presets")
    ssub = p.add_subparsers(dest="action", required=True)
    ssub.add_parser("list", help="list preset names")
    show = ssub.add_parser("show", help="print a preset")
    show.add_argument("name")
    return parser


def load_scenario(args) -> Scenario:
    sc = Scenario.load(args.scenario)
    overrides = dict(parse_override(item) for item in args.overrides)
    if args.no_feedback:
        overrides["schedule.feedback"] = "false"
    if args.no_measurement:
        overrides["schedule.measurement"] = "false"
    return sc.with_overrides(overrides) if overrides else sc


def _scenario_command(args) -> int:
    if args.action == "list":
        for name in preset_names():
            sc = Scenario.load(name)
            print(f"{name}\t{sc.string('description', 'output', '')}")
        return EXIT_OK
    sc = Scenario.load(args.name)
    for section, items in sc.sections.items():
        print(f"[{section}]")
        for key, value in items.items():
            print(f"{key} = {value}")
        print()
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            try:
                results = run_suites(args.suites)
            except KeyError as exc:
                print(f"error: {exc.args[0]}", file=sys.stderr)
                return EXIT_CONFIG
            for r in results:
                print(r.line())
            return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION
        if args.command == "scenario":
            return _scenario_command(args)

        sc = load_scenario(args)
        if args.command == "run":
            emit_csv(trajectory(sc, seed=args.seed, index=args.index), args.out)
        elif args.command == "ensemble":
            points = sweep_points(sc)
            summaries = run_ensemble(sc, runs=args.runs, seed=args.seed, workers=args.workers)
            final_only = args.final_only or sc.flag("final_only", "output", False)
            emit_csv(summaries, args.out, axes=list(points[0]), final_only=final_only)
        elif args.command == "reference":
            write_columns(reference(sc.build()), args.out)
        elif args.command == "fields":
            write_fields(feedback_fields(sc.build()), args.out)
    except ValueError as exc:
        # ConfigError plus parameter validation raised while building the scenario
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
