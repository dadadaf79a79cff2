"""Command-line entry point: ``holosim run | list | validate``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

from . import __version__
from .artifacts import write_artifacts
from .config import FORMATS, set_override, validate_config
from .errors import ConfigError, HolosimError
from .scenarios import get_scenario, list_scenarios, SCENARIOS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be among {', '.join(FORMATS)}")
    return fmts


def build_parser():
    parser = argparse.ArgumentParser(prog="holosim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"holosim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its artifacts")
    run.add_argument("scenario", choices=sorted(SCENARIOS))
    run.add_argument("--config", help="YAML configuration file")
    run.add_argument("--out", help="output directory (default: $HOLOSIM_OUT or ./holosim-out/<scenario>)")
    run.add_argument("--format", type=_formats, help="comma-separated subset of csv,json,svg")
    run.add_argument("--threads", type=int, default=1, help="worker processes for independent runs")
    run.add_argument("--dt", type=float, metavar="PS", help="integration step in ps")
    run.add_argument("--no-decoherence", action="store_true", help="switch off all collapse channels")

    sub.add_parser("list", help="list scenarios with runtime estimates")

    val = sub.add_parser("validate", help="check a configuration and print it fully resolved")
    val.add_argument("--config", required=True)
    return parser


def _print_config_error(exc: ConfigError):
    print("configuration error:", file=sys.stderr)
    for path, msg in exc.problems:
        print(f"  {path or '<root>'}: {msg}", file=sys.stderr)


def _resolve(args):
    cfg, prov = validate_config(args.config)
    if getattr(args, "dt", None) is not None:
        if not 0 < args.dt <= 50:
            raise ConfigError([("--dt", "must lie in (0, 50] ps")])
        set_override(cfg, prov, "simulation.dt_ps", args.dt)
    if getattr(args, "no_decoherence", False):
        set_override(cfg, prov, "simulation.decoherence", False)
    if getattr(args, "format", None):
        set_override(cfg, prov, "output.formats", args.format)
    return cfg, prov


def cmd_run(args):
    try:
        cfg, prov = _resolve(args)
        if args.threads < 1:
            raise ConfigError([("--threads", "must be at least 1")])
    except ConfigError as exc:
        _print_config_error(exc)
        return EXIT_CONFIG
    scenario = get_scenario(args.scenario)
    out = args.out or cfg["output"]["directory"] or os.environ.get("HOLOSIM_OUT")
    if out is None:
        out = os.path.join("holosim-out", scenario.name)
    try:
        tables, reports = scenario.run(cfg, threads=args.threads)
        manifest = write_artifacts(out, scenario.name, tables, reports, cfg, prov,
                                   cfg["output"]["formats"], __version__)
    except (HolosimError, ArithmeticError, ValueError) as exc:
        print(f"scenario {scenario.name} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        if os.environ.get("HOLOSIM_DEBUG"):
            traceback.print_exc()
        return EXIT_SIMULATION
    print(f"{scenario.name}: wrote {len(manifest['outputs'])} files to {out}")
    return EXIT_OK


def cmd_list(args):
    rows = list_scenarios()
    width = max(len(r[0]) for r in rows)
    for name, desc, runtime in rows:
        print(f"{name:<{width}}  ~{runtime:>4.0f} s  {desc}")
    return EXIT_OK


def cmd_validate(args):
    try:
        cfg, prov = _resolve(args)
    except ConfigError as exc:
        _print_config_error(exc)
        return EXIT_CONFIG
    print(json.dumps({"config": cfg, "provenance": prov}, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "list": cmd_list, "validate": cmd_validate}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
