"""Command-line interface: run a configured sweep or verify it against an
exact reference."""

from __future__ import annotations

import argparse
import sys

from . import runner


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="meanforce",
        description="Reduced thermal states of strongly coupled spin systems "
                    "by stochastic block Lanczos quadrature.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a sweep and write CSV + manifest")
    p_run.add_argument("config", help="experiment TOML file")
    p_run.add_argument("--out", default=None,
                       help=f"output directory (default: ${runner.OUTPUT_DIR_ENV} or .)")
    p_run.add_argument("--threads", type=int, default=1,
                       help="worker processes for grid points x repeats")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the master seed")

    p_verify = sub.add_parser("verify",
                              help="compare estimator against the oracle on the "
                                   "[verify] grid; nonzero exit on failure")
    p_verify.add_argument("config", help="experiment TOML file")

    args = parser.parse_args(argv)
    config = runner.load_config(args.config)

    if args.command == "run":
        result = runner.run(config, out_dir=args.out, threads=args.threads,
                            seed=args.seed)
        print(f"wrote {result.csv_path}")
        print(f"wrote {result.manifest_path}")
        return 0

    report = runner.verify(config)
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
