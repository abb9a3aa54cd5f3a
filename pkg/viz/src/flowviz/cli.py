"""Figure CLIs over persisted run directories.

    plot-metrics --runs DIR [DIR ...] --metric mmd2 [--log] --out FILE
    plot-snapshots --run DIR [--iters I ...] [--gif] --out DIR

Both write PNG and SVG. Exit codes: 0 success, 1 bad arguments or schema
violation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import METRICS, FigureSpec, plot_metrics, plot_snapshots
from .io import SchemaError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(message)


def _run(build_spec, render, argv) -> int:
    try:
        spec = build_spec(argv)
        written = render(spec)
        for path in written:
            print(path)
        return 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def _metrics_spec(argv) -> FigureSpec:
    parser = _Parser(prog="plot-metrics", description="metric curves from run directories")
    parser.add_argument("--runs", nargs="+", required=True)
    parser.add_argument("--metric", choices=METRICS, default="mmd2")
    parser.add_argument("--log", action="store_true")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    return FigureSpec(run_dirs=tuple(args.runs), metric=args.metric,
                      log_y=args.log, out=args.out)


def _snapshots_spec(argv) -> FigureSpec:
    parser = _Parser(prog="plot-snapshots", description="particle scatter frames from one run")
    parser.add_argument("--run", required=True)
    parser.add_argument("--iters", nargs="*", type=int, default=[])
    parser.add_argument("--gif", action="store_true")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    return FigureSpec(run_dirs=(args.run,), snapshot_iters=tuple(args.iters),
                      gif=args.gif, out=args.out)


def main_metrics(argv=None) -> int:
    return _run(_metrics_spec, plot_metrics, argv)


def main_snapshots(argv=None) -> int:
    return _run(_snapshots_spec, plot_snapshots, argv)


if __name__ == "__main__":
    sys.exit(main_metrics())
