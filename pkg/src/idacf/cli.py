"""Command-line entry point: ``idacf <subcommand> [--config FILE] [--override key=value] [--out DIR]``.

Exit status: 0 when every check passes, 2 on an acceptance failure, 1 on a
usage or configuration error (with a one-line ``error: <kind>: <reason>``).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import KINDS, load_config
from .errors import ConfigurationError
from .harness import run, write_outputs

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="idacf", description="Monte Carlo checks for heavy-tailed ID processes over conservative flows")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (section.key or unambiguous key); repeatable")
        p.add_argument("--out", help="output directory (defaults to run.out_dir)")
        p.add_argument("--dump-paths", action="store_true", help="write simulated paths to paths.csv")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        overrides = list(args.override) + (["dump_paths=true"] if args.dump_paths else [])
        cfg = load_config(args.config, overrides, kind=args.command)
        report = run(cfg)
        out = write_outputs(report, cfg, args.out or cfg.out_dir)
    except ConfigurationError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in report.lines():
        print(line)
    print(f"{'PASS' if report.passed else 'FAIL'} {cfg.kind} -> {out}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
