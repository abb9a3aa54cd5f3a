"""Command-line interface.

    drmmd run --config cfg.yaml [--seed S] [--out DIR] [--algo drmmd|mmd|both] [--quiet]
    drmmd gen-data --scenario three_rings --n 300 --seed 0 --out cloud.csv
    drmmd eval --a a.csv --b b.csv --kernel gaussian --bandwidth 0.3

Exit codes: 0 success, 1 config error, 2 numerical abort, 3 I/O error.
DRMMD_THREADS caps the linear-algebra thread pools.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import datasets
from .config import parse_config_file
from .exceptions import ConfigError, NumericalAbort
from .experiment import run_experiment
from .kernels import kernel_from_name
from .metrics import w2_exact
from .particles import ParticleSystem
from .witness import mmd2_estimate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); map onto config errors
        raise ConfigError(message)


def _apply_thread_cap():
    val = os.environ.get("DRMMD_THREADS")
    if not val:
        return None
    try:
        n = int(val)
    except ValueError as exc:
        raise ConfigError(f"DRMMD_THREADS must be an integer, got {val!r}") from exc
    if n < 1:
        raise ConfigError("DRMMD_THREADS must be >= 1")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="drmmd", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--algo", choices=["drmmd", "mmd", "both"], default="both")
    p_run.add_argument("--quiet", action="store_true")

    p_gen = sub.add_parser("gen-data", help="write a scenario point cloud as CSV")
    p_gen.add_argument(
        "--scenario", required=True, choices=["three_rings", "gaussian", "gaussian_mixture"]
    )
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--noise", type=float, default=0.02)
    p_gen.add_argument("--mean", default="0,0", help="comma-separated mean (gaussian)")
    p_gen.add_argument("--cov-scale", type=float, default=1.0)

    p_eval = sub.add_parser("eval", help="MMD^2 and W2 between two CSV clouds")
    p_eval.add_argument("--a", required=True)
    p_eval.add_argument("--b", required=True)
    p_eval.add_argument("--kernel", choices=["gaussian", "imq"], default="gaussian")
    p_eval.add_argument("--bandwidth", type=float, default=1.0)
    p_eval.add_argument("--offset", type=float, default=1.0)
    return parser


def _load_cloud(path) -> ParticleSystem:
    try:
        pts = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError:
        raise
    except ValueError as exc:
        raise ConfigError(f"cannot parse point cloud {path}: {exc}") from exc
    return ParticleSystem(pts)


def _cmd_run(args) -> int:
    cfg = parse_config_file(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    algo_filter = None if args.algo == "both" else args.algo
    results = run_experiment(cfg, algo_filter=algo_filter, quiet=args.quiet)
    if not args.quiet:
        for name, record, run_dir in results:
            last = record.rows[-1]
            print(
                f"{name}: {len(record.rows)} rows, final mmd2={last.mmd2:.6e}, "
                f"outputs in {run_dir}"
            )
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    if args.scenario == "three_rings":
        system = datasets.gen_three_rings(args.n, args.noise, args.seed)
    elif args.scenario == "gaussian":
        try:
            mean = [float(v) for v in args.mean.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --mean value {args.mean!r}") from exc
        system = datasets.gen_gaussian(args.n, mean, args.cov_scale, args.seed)
    else:
        system = datasets.gen_gaussian_mixture(
            args.n, datasets.RING_CENTERS, 0.04, args.seed
        )
    rows = "\n".join(",".join(f"{v:.17g}" for v in row) for row in system.positions)
    with open(args.out, "w") as fh:
        fh.write(rows + "\n")
    return EXIT_OK


def _cmd_eval(args) -> int:
    a = _load_cloud(args.a)
    b = _load_cloud(args.b)
    kernel = kernel_from_name(args.kernel, bandwidth=args.bandwidth, offset=args.offset)
    out = {
        "mmd2": mmd2_estimate(a, b, kernel),
        "w2": w2_exact(a, b) if len(a) == len(b) else None,
    }
    print(json.dumps(out))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        limits = _apply_thread_cap()
        try:
            if args.command == "run":
                return _cmd_run(args)
            if args.command == "gen-data":
                return _cmd_gen_data(args)
            return _cmd_eval(args)
        finally:
            if limits is not None:
                limits.unregister()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
