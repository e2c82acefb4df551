"""Command-line entry point.

    tdho run CONFIG.json [--out DIR] [--format csv|json]
    tdho check CONFIG.json [--json]
    tdho list-scenarios [--json]

Exit codes: 0 every check passed, 1 a check failed (or a stage aborted),
2 the configuration could not be loaded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .runner import run
from .scenarios import list_scenarios

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return None


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    out = args.out or cfg.output_path or "tdho-run"
    report = run(cfg, out_dir=out, fmt=args.format)
    for line in report.summary_lines():
        print(line)
    print(f"wrote {out}/report.json" + "".join(f", {out}/{f}" for f in report.series_files))
    return report.exit_code


def cmd_check(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    report = run(cfg, out_dir=None, emit_series=False)
    if args.json:
        print(json.dumps(report.to_dict(), indent=1))
    else:
        for line in report.summary_lines():
            print(line)
    return report.exit_code


def cmd_list(args) -> int:
    scenarios = list_scenarios()
    if args.json:
        print(json.dumps([s.to_dict() for s in scenarios], indent=1))
        return EXIT_PASS
    for s in scenarios:
        print(f"{s.name}: {s.description}")
        print(f"    omega_sq = {s.omega_sq}    F = {s.force}    t in [{s.t0:g}, {s.t1:g}]")
        print(f"    seeds:  {json.dumps(s.seeds)}")
        print(f"    checks: {', '.join(s.checks)}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdho", description="Invariants of the driven time-dependent oscillator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run checks and write series plus report")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: config output.path or ./tdho-run)")
    p.add_argument("--format", choices=("csv", "json"), help="series format (default: config output.format)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run checks and print the report only")
    p.add_argument("config")
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("list-scenarios", help="show the built-in scenario library")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
