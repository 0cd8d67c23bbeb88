"""Command line entry point: ``hadamard-vvi run | list-catalog | describe``.

Exit codes: 0 when no licensed assertion failed, 1 when one did, 2 for usage
errors (bad arguments, invalid config, unwritable output directory).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .catalog import list_catalog
from .experiment import OUTPUT_DIR_ENV, SUITES, ConfigError, describe_suite, parse_config, run

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hadamard-vvi", description="Sampled verification suites on Hadamard manifolds.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the suites of a JSON config")
    r.add_argument("config", help="path to the JSON config, or - for stdin")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--output-dir", help=f"output directory (beats ${OUTPUT_DIR_ENV} and the config)")
    r.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")

    sub.add_parser("list-catalog", help="list the built-in problems")

    d = sub.add_parser("describe", help="describe a suite")
    d.add_argument("suite", choices=SUITES)
    return ap


def _run(args) -> int:
    try:
        text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = parse_config(text)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    overrides = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("error: --seed must lie in [0, 2**64)", file=sys.stderr)
            return EXIT_USAGE
        overrides["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
    try:
        report = run(config, output_dir=args.output_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for s in report.suites:
        tag = "pass" if s.passed else "FAIL"
        lic = "licensed" if s.licensed else "diagnostic"
        print(f"{s.name:<18} {tag}  ({lic}, worst margin {s.summary.get('worst_margin', float('nan')):.3e})")
    for a in report.assertions:
        if a["licensed"] and not a["holds"]:
            print(f"licensed assertion failed: {a['name']}")
    print(f"wrote {report.paths['report']}")
    return report.exit_code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    if args.command == "list-catalog":
        for e in list_catalog():
            print(f"{e.id:<22} {e.manifold.id:<20} {e.convexity_status:<16} {e.description}")
        return EXIT_OK
    print(describe_suite(args.suite))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
