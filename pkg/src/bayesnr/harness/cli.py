"""Command-line entry point ``bayesnr``.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 validation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from bayesnr.errors import ConfigError, NumericalError
from bayesnr.harness import config, runs
from bayesnr.harness.validate import run_validate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3

_RUNNERS = {
    "curve": runs.run_curve,
    "sweep": runs.run_sweep,
    "mc": runs.run_mc,
    "thresholds": runs.run_thresholds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesnr", description="MMSE / max-SNR estimator experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _RUNNERS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        p.add_argument("config", help="JSON experiment config")
        p.add_argument("--out", help="output directory (overrides output.dir)")
    sub.add_parser("validate", help="run the self-check suites")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            report = run_validate()
            print(report.to_json())
            return EXIT_OK if report.passed else EXIT_VALIDATION
        cfg = config.load(args.config)
        path = _RUNNERS[args.command](cfg, args.out)
        if args.command == "thresholds":
            sys.stdout.write(path.read_text(encoding="utf-8"))
        print(f"wrote {path}", file=sys.stderr)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
