"""Command-line entry point.

Commands:
  simulate <config>        run a config (each sweep point gets its own dir)
  preset <name> [config]   run a named experiment preset
  check <run_dir>          verify artifact integrity and bit-identical replay
  dump-schema              print the config schema and file formats as JSON

Exit codes: 0 success, 2 metric failure, 3 configuration error, 4 numeric
failure.  The environment variable CONGESTFLOW_OUTPUT_ROOT sets the default
parent directory for run output.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import _SCHEMA, parse_config, render_config
from .errors import ConfigError, ParameterError, SolverError, StepError
from .presets import PRESET_NAMES, default_config, run_preset
from .runner import (
    ENERGY_COLUMNS,
    OUTPUT_ROOT_ENV,
    SCHEMA_VERSION,
    output_root,
    replay_check,
    simulate,
    write_run,
)

EXIT_OK = 0
EXIT_METRIC = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="congestflow",
        description="Congestion-constrained chemotaxis laboratory",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker pool size for independent sweep points")
    parser.add_argument("--override-scale-guard", action="store_true",
                        help="allow epsilon below 4h")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a config file")
    p_sim.add_argument("config", type=Path)
    p_sim.add_argument("--out", type=Path, default=None, help="output directory")
    p_sim.add_argument("--dry-run", action="store_true",
                       help="echo the validated config and exit without computing")
    p_sim.add_argument("--recovery", action="store_true",
                       help="recover pressure fields at every logged step")

    p_pre = sub.add_parser("preset", help="run a named experiment preset")
    p_pre.add_argument("name")
    p_pre.add_argument("config", type=Path, nargs="?", default=None)
    p_pre.add_argument("--out", type=Path, default=None)
    p_pre.add_argument("--dry-run", action="store_true")

    p_chk = sub.add_parser("check", help="verify a run directory")
    p_chk.add_argument("run_dir", type=Path)

    sub.add_parser("dump-schema", help="print config schema and formats as JSON")
    return parser


def _say(args, *message):
    if not args.quiet:
        print(*message)


def _cmd_simulate(args) -> int:
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfgs = parse_config(text, override_scale_guard=args.override_scale_guard)
    except ConfigError as exc:
        for issue in exc.issues:
            print(f"config error: {issue}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dry_run:
        for cfg in cfgs:
            print(render_config(cfg))
        return EXIT_OK

    root = args.out or (output_root() / args.config.stem)

    def one(item):
        i, cfg = item
        run_dir = Path(root) if len(cfgs) == 1 else Path(root) / f"point_{i:03d}"
        _, states, summary = simulate(cfg, with_recovery=args.recovery)
        write_run(run_dir, cfg, states, summary, {"command": "simulate"})
        return run_dir, summary

    try:
        if args.threads > 1 and len(cfgs) > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                results = list(pool.map(one, enumerate(cfgs)))
        else:
            results = [one(item) for item in enumerate(cfgs)]
    except (SolverError, StepError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for run_dir, summary in results:
        _say(args, f"wrote {run_dir} ({summary['steps']} steps)")
    return EXIT_OK


def _cmd_preset(args) -> int:
    if args.name not in PRESET_NAMES:
        known = ", ".join(PRESET_NAMES)
        print(f"error: unknown preset '{args.name}' (known: {known})", file=sys.stderr)
        return EXIT_CONFIG
    text = None
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if args.dry_run:
        shown = text if text is not None else default_config(args.name)
        try:
            for cfg in parse_config(shown, override_scale_guard=True):
                print(render_config(cfg))
        except ConfigError as exc:
            for issue in exc.issues:
                print(f"config error: {issue}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    out = args.out or (output_root() / args.name)
    try:
        report = run_preset(args.name, text, out)
    except ConfigError as exc:
        for issue in exc.issues:
            print(f"config error: {issue}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, StepError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for name, metric in sorted(report["metrics"].items()):
        _say(args, f"{name}: {'PASS' if metric['passed'] else 'FAIL'} "
                   f"(measured={metric['measured']}, target={metric['target']})")
    _say(args, f"report: {Path(out) / 'report.json'}")
    return EXIT_OK if report["passed"] else EXIT_METRIC


def _cmd_check(args) -> int:
    try:
        result = replay_check(args.run_dir)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: not a readable run directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for issue in exc.issues:
            print(f"config error: {issue}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, StepError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _say(args, f"integrity: {'ok' if result['integrity_ok'] else 'FAILED'}")
    _say(args, f"replay: {'ok' if result['replay_ok'] else 'FAILED'}")
    for path in result["mismatched"]:
        print(f"corrupted artifact: {path}", file=sys.stderr)
    return EXIT_OK if result["integrity_ok"] and result["replay_ok"] else EXIT_METRIC


def _cmd_dump_schema(_args) -> int:
    schema = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            sec: {
                key: {"type": kind, "default": default}
                for key, (kind, default) in keys.items()
            }
            for sec, keys in _SCHEMA.items()
        },
        "energy_csv_columns": list(ENERGY_COLUMNS),
        "curve_csv_columns": ["x", "y", "kappa"],
        "contact_csv_columns": ["x", "y", "theta", "target_theta"],
        "field_dump": {
            "text": "header 'grid dim nx [ny] hx [hy]', one value per line, row-major",
            "binary": "raw little-endian float64 with a .json sidecar",
        },
        "output_root_env": OUTPUT_ROOT_ENV,
        "exit_codes": {"ok": 0, "metric_failure": 2, "config_error": 3, "numeric_failure": 4},
        "presets": list(PRESET_NAMES),
    }
    print(json.dumps(schema, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "preset":
            return _cmd_preset(args)
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_dump_schema(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
