"""Command-line entry point for the experiment harness.

Subcommands: run, compare, export-front, list-problems. Exit codes: 0 on
success, 1 on usage or configuration errors, 2 when an experiment had failed
runs, 3 when a comparison hits an incomplete cell.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (ConfigError, IncompleteCellError, compare, export_front,
                      parse_config, run_experiment)
from .problems import list_problems

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUN_FAILURE = 2
EXIT_INCOMPLETE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the harness contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="decoevo",
                     description="Constrained multi-objective DE experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every cell of an experiment config")
    run_p.add_argument("config", help="path to the experiment config file")
    run_p.add_argument("--output", help="override the output directory")
    run_p.add_argument("--workers", type=int, help="override the worker count")

    cmp_p = sub.add_parser("compare", help="statistically compare two experiment outputs")
    cmp_p.add_argument("cell_a", help="cell directory or experiment root")
    cmp_p.add_argument("cell_b", help="cell directory or experiment root")
    cmp_p.add_argument("--metric", choices=["igd", "hv", "feasible_ratio"],
                       default="igd")

    exp_p = sub.add_parser("export-front", help="export a record's front as CSV")
    exp_p.add_argument("record", help="path to a run record file")
    exp_p.add_argument("output", help="path of the CSV to write")

    sub.add_parser("list-problems", help="list the registered problem names")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "list-problems":
        for name in list_problems():
            print(name)
        return EXIT_OK

    if args.command == "run":
        try:
            config = parse_config(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if args.output:
            config.output_dir = type(config.output_dir)(args.output)
        if args.workers:
            config.workers = args.workers
        result = run_experiment(config)
        print(f"wrote {len(result.records)} records under {config.output_dir}")
        if not result.complete:
            for problem, seed, error in result.failures:
                print(f"failed: {problem} seed {seed}: {error}", file=sys.stderr)
            return EXIT_RUN_FAILURE
        return EXIT_OK

    if args.command == "compare":
        try:
            report = compare(args.cell_a, args.cell_b, args.metric)
        except IncompleteCellError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INCOMPLETE
        except (FileNotFoundError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(report.render())
        return EXIT_OK

    if args.command == "export-front":
        try:
            out = export_front(args.record, args.output)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"wrote {out}")
        return EXIT_OK

    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
