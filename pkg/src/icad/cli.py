"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .centrality import Measure, compute_centrality, write_reports_csv
from .config import load_config
from .errors import ConfigError, IcadError
from .experiment import emit_outputs, run_experiment
from .graph import read_graph
from .legacy import import_legacy_trace
from .netsim.flows import write_trace_csv

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("icad")


class _Parser(argparse.ArgumentParser):
    # bad usage is a configuration problem, not argparse's default exit status 2
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icad", description="Information-centrality anomaly detection experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a replicated experiment and write its outputs")
    run.add_argument("--config", required=True, help="key = value configuration file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--replications", type=int, help="override the configured replication count")
    run.add_argument("--seed", type=int, help="override the configured rng_seed")

    cen = sub.add_parser("centrality", help="score the nodes of a graph file")
    cen.add_argument("--graph", required=True, help="graph file ('n <count>' and 'e <i> <j> <w>' lines)")
    cen.add_argument("--measure", required=True, choices=[m.value for m in Measure])
    cen.add_argument("--out", help="CSV destination (default: stdout)")

    imp = sub.add_parser("import", help="convert a legacy trace to the native CSV trace")
    imp.add_argument("--trace", required=True, help="legacy whitespace trace")
    imp.add_argument("--out", required=True, help="native CSV destination")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config, replications=args.replications, rng_seed=args.seed)

    def progress(rep):
        status = "ok" if rep.ok else f"failed ({rep.error})"
        log.info("replication %d/%d %s", rep.index + 1, config.replications, status)

    summary = run_experiment(config, progress=progress)
    emit_outputs(summary, args.out)
    failed = len(summary.replications) - len(summary.successful())
    print(f"{len(summary.successful())} of {len(summary.replications)} replications succeeded; outputs in {args.out}")
    return EXIT_RUNTIME if failed == len(summary.replications) else EXIT_OK


def _cmd_centrality(args) -> int:
    report = compute_centrality(read_graph(args.graph), args.measure)
    write_reports_csv([report], args.out if args.out else sys.stdout)
    return EXIT_OK


def _cmd_import(args) -> int:
    result = import_legacy_trace(args.trace)
    write_trace_csv(result.records, args.out)
    print(
        f"{len(result.records)} records imported, {result.skipped} lines skipped, "
        f"{result.missing_origin} without a send record",
        file=sys.stderr,
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"run": _cmd_run, "centrality": _cmd_centrality, "import": _cmd_import}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"icad: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"icad: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IcadError, ArithmeticError, ValueError) as exc:
        print(f"icad: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
