"""Plot specifications and sweep-CSV loading.

A plot spec is a small TOML file naming the input CSV files, the figure
kind, and styling options.  Input CSVs follow the sweep schema (version 1);
when a sibling ``*_manifest.json`` exists its schema version is checked.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

SCHEMA_VERSION = 1
KINDS = ("eig_vs_T", "phase_heatmap", "deviation_curves")

__all__ = ["PlotSpec", "SweepTable", "load_plotspec", "load_tables"]


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    csv_paths: tuple[Path, ...]
    output: Path
    quantiles: tuple[float, float, float] = (10.0, 50.0, 90.0)
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    value_column: str = "entropy"      # phase_heatmap
    group_by: str = "alpha"            # deviation_curves
    mark_argmax: bool = True           # phase_heatmap
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.output.suffix not in (".svg", ".pdf"):
            raise ValueError(f"output must be .svg or .pdf, got {self.output}")
        if len(self.quantiles) != 3 or not all(
                0 <= q <= 100 for q in self.quantiles):
            raise ValueError(f"quantiles must be three percentiles, got {self.quantiles}")


def load_plotspec(path: str | Path) -> PlotSpec:
    path = Path(path)
    raw = tomllib.loads(path.read_text())
    base = path.parent
    axes = raw.get("axes", {})
    options = raw.get("options", {})
    csv_paths = tuple(
        (base / p) if not Path(p).is_absolute() else Path(p)
        for p in raw["csv"])
    output = Path(raw["output"])
    if not output.is_absolute():
        output = base / output
    return PlotSpec(
        kind=raw["kind"],
        csv_paths=csv_paths,
        output=output,
        quantiles=tuple(raw.get("quantiles", (10, 50, 90))),
        x_range=tuple(axes["x_range"]) if "x_range" in axes else None,
        y_range=tuple(axes["y_range"]) if "y_range" in axes else None,
        value_column=options.get("value_column", "entropy"),
        group_by=options.get("group_by", "alpha"),
        mark_argmax=bool(options.get("mark_argmax", True)),
        title=raw.get("title"),
    )


@dataclass
class SweepTable:
    """Columnar view of one or more sweep CSVs (all floats)."""

    columns: list[str]
    data: dict[str, np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return len(next(iter(self.data.values()))) if self.data else 0

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.data]
        if missing:
            raise ValueError(f"CSV is missing required columns: {missing}")

    def eig_columns(self, prefix: str) -> list[str]:
        cols = sorted(
            (c for c in self.columns if c.startswith(prefix)
             and c[len(prefix):].isdigit()),
            key=lambda c: int(c[len(prefix):]))
        return cols


def _check_manifest(csv_path: Path) -> None:
    manifest = csv_path.with_name(csv_path.stem + "_manifest.json")
    if manifest.exists():
        meta = json.loads(manifest.read_text())
        version = meta.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(
                f"{csv_path} has schema_version {version}, expected {SCHEMA_VERSION}")


def load_tables(paths: tuple[Path, ...]) -> SweepTable:
    """Read and concatenate sweep CSVs into float columns."""
    rows: list[dict] = []
    columns: list[str] | None = None
    for path in paths:
        _check_manifest(path)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            got = list(reader)
        if not got:
            raise ValueError(f"{path} contains no rows")
        if columns is None:
            columns = list(got[0].keys())
        elif list(got[0].keys()) != columns:
            raise ValueError(f"{path} columns differ from the first CSV")
        rows.extend(got)
    data = {
        c: np.array([float(r[c]) if r[c] != "" else np.nan for r in rows])
        for c in columns
    }
    return SweepTable(columns=columns, data=data)
