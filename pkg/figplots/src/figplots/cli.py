"""Command-line interface: render a figure from a plot spec."""

from __future__ import annotations

import argparse
import sys

from .figures import plot
from .plotspec import load_plotspec


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplots", description="Render figures from sweep CSV files.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot", help="render the figure described by a spec")
    p_plot.add_argument("plotspec", help="plot spec TOML file")
    args = parser.parse_args(argv)

    out = plot(load_plotspec(args.plotspec))
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
