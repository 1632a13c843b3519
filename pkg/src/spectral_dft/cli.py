"""Command-line entry point: ``spectral-dft run <config.yaml>``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 failed validation check.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-dft", description="Pseudospectral DFT and DDFT scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario configuration")
    run.add_argument("config", help="YAML scenario file")
    run.add_argument("--output-dir", help="override output.directory")
    run.add_argument("--jobs", type=int, default=1, help="workers for sweep points of convergence studies")
    run.add_argument("--verify", action="store_true", help="single-threaded reductions for byte-stable output")
    run.add_argument("--dump-operators", action="store_true", help="save the convolution matrices as .npz")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.verify:
        # must happen before numpy loads its BLAS
        for var in _THREAD_VARS:
            os.environ[var] = "1"
        args.jobs = 1
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    from .config import ConfigError, load_config

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .ddft import StiffIntegrationError
    from .fmt import PackingError
    from .runner import execute, write_artifacts
    from .solver import ConvergenceError

    out_dir = args.output_dir or cfg.output.directory
    try:
        result = execute(cfg, jobs=args.jobs)
    except (ConvergenceError, PackingError, StiffIntegrationError, FloatingPointError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        history = getattr(exc, "history", None)
        if history:
            print(f"last residuals: {history[-5:]}", file=sys.stderr)
        return EXIT_SOLVER
    paths = write_artifacts(cfg, result, out_dir, dump_operators=args.dump_operators)
    for p in paths:
        print(p)
    failed = [k for k, ok in result.checks.items() if not ok]
    if failed:
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
