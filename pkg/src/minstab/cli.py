"""Command line interface.

Exit codes: 0 report written, 2 configuration or precondition error,
3 when ``Sigma`` is not minimal or the pinching hypothesis fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import AnalysisConfig, ConfigError
from .expr import ExpressionError
from .geometry import GeometryError, pinch_check
from .pipeline import run_analysis
from .scenarios import SCENARIOS, scenario_text
from .selftest import format_results, run_selftest

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS = 0, 2, 3


def _load(args) -> AnalysisConfig:
    if args.scenario:
        try:
            return AnalysisConfig.from_toml(scenario_text(args.scenario))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    if not args.config:
        raise ConfigError("give a config file or --scenario NAME")
    return AnalysisConfig.from_file(args.config)


def cmd_analyze(args) -> int:
    cfg = _load(args)
    result = run_analysis(cfg, timings=args.timings, csv_path=args.csv)
    text = result.report.to_json()
    if args.out:
        result.report.write(args.out)
        s = result.report.stability
        print(f"{cfg.name}: {s['verdict']}  integral_F={s['integral_F']:.10g}  -> {args.out}")
    else:
        sys.stdout.write(text)
    return result.exit_code


def cmd_pinch(args) -> int:
    cfg = _load(args)
    chart = cfg.build_m1()
    mode = cfg.mode
    try:
        rep = pinch_check(
            chart,
            grid=args.grid or mode["pinch_resolution"],
            mode=mode["epsilon"],
            m=chart.m1 + cfg.build_m2().dim,
            tol=cfg.tolerances["pinch"],
        )
    except GeometryError as exc:
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(json.dumps(rep.to_dict(), sort_keys=True, indent=2) + "\n")
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed, scale=args.scale)
    sys.stdout.write(format_results(results))
    return 0 if all(r.passed for r in results) else 1


def cmd_scenarios(args) -> int:
    if args.name:
        try:
            sys.stdout.write(scenario_text(args.name))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    else:
        print("\n".join(sorted(SCENARIOS)))
    return EXIT_OK


def cmd_version(args) -> int:
    print(__version__)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minstab", description="Instability certificates for minimal submanifolds of products.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the full pipeline and write a JSON report")
    a.add_argument("config", nargs="?")
    a.add_argument("--scenario", choices=sorted(SCENARIOS))
    a.add_argument("--out", "-o", help="report path (default: stdout)")
    a.add_argument("--csv", help="per-node CSV dump path")
    a.add_argument("--timings", action="store_true", help="record wall-clock timings in the report")
    a.set_defaults(func=cmd_analyze)

    q = sub.add_parser("pinch", help="sample the sectional curvature of M1")
    q.add_argument("config", nargs="?")
    q.add_argument("--scenario", choices=sorted(SCENARIOS))
    q.add_argument("--grid", type=int, help="points per chart axis")
    q.set_defaults(func=cmd_pinch)

    s = sub.add_parser("selftest", help="run the seeded identity suites")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale", type=float, default=1.0, help="multiply suite sample counts")
    s.set_defaults(func=cmd_selftest)

    c = sub.add_parser("scenarios", help="list built-in scenarios or print one")
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_scenarios)

    v = sub.add_parser("version", help="print the package version")
    v.set_defaults(func=cmd_version)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExpressionError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
