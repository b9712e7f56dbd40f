"""Command line entry point: ``kvblowup {certify,simulate,sweep,regress} --config FILE``."""

from __future__ import annotations

import argparse
import sys

from .harness import (
    EXIT_CONFIG,
    EXIT_IO,
    ConfigError,
    OutputError,
    parse_config,
    run_scenario,
)

COMMANDS = {
    "certify": "check the exact cascade certificate and the norm series",
    "simulate": "integrate one trajectory and record its norms",
    "sweep": "run one simulation per value of a parameter",
    "regress": "compare a global-regime run with its energy bound",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kvblowup", description="Blow-up certificate and spectral solver runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario file (key = value lines, [sections])")
        p.add_argument("--out", default=None, help="output directory (default: output_dir from the config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    try:
        scenario = parse_config(text, kind=args.command)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log = None if args.quiet else print
    try:
        record = run_scenario(scenario, out_dir=args.out, log=log)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(f"wrote {len(record.files)} files; exit {record.exit_code}")
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
