"""Figure renderers for the three sweep-plot kinds.

Rendering is deterministic: the SVG hash salt and fonts are pinned and
output metadata carries no timestamps, so identical inputs produce
identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .plotspec import PlotSpec, SweepTable, load_tables  # noqa: E402

__all__ = ["plot", "heatmap_argmax_fields"]

_RC = {
    "svg.hashsalt": "figplots",
    "font.family": "DejaVu Sans",
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def plot(spec: PlotSpec) -> Path:
    """Render the figure described by ``spec`` and return the output path."""
    table = load_tables(spec.csv_paths)
    with matplotlib.rc_context(_RC):
        if spec.kind == "eig_vs_T":
            fig = _eig_vs_temperature(spec, table)
        elif spec.kind == "phase_heatmap":
            fig = _phase_heatmap(spec, table)
        else:
            fig = _deviation_curves(spec, table)
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if spec.output.suffix == ".svg" else {}
        fig.savefig(spec.output, metadata=metadata)
        plt.close(fig)
    return spec.output


def _quantile_bands(table: SweepTable, columns: list[str],
                    quantiles) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Per-beta quantiles over the repeat axis for each eigenvalue column.

    Returns the sorted temperatures and, per column, an array of shape
    (3, n_T) holding the low/mid/high quantile curves.
    """
    betas = np.unique(table.data["beta"])
    temps = 1.0 / betas[::-1]
    out = {}
    for col in columns:
        curves = np.empty((3, len(betas)))
        for i, beta in enumerate(betas[::-1]):
            sel = table.data[col][table.data["beta"] == beta]
            curves[:, i] = np.percentile(sel, quantiles)
        out[col] = curves
    return temps, out


def _oracle_curves(table: SweepTable, columns: list[str]) -> dict[str, np.ndarray]:
    betas = np.unique(table.data["beta"])
    out = {}
    for col in columns:
        vals = np.empty(len(betas))
        for i, beta in enumerate(betas[::-1]):
            sel = table.data[col][table.data["beta"] == beta]
            vals[i] = sel[0]
        out[col] = vals
    return out


def _eig_vs_temperature(spec: PlotSpec, table: SweepTable):
    table.require("beta", "repeat")
    rho_cols = table.eig_columns("rho_eig_")
    h_cols = table.eig_columns("H_eig_")
    if not rho_cols or not h_cols:
        raise ValueError("CSV has no eigenvalue columns")
    lo, mid, hi = spec.quantiles

    fig, (ax_h, ax_rho) = plt.subplots(2, 1, figsize=(6, 7), sharex=True)
    for ax, cols, label in ((ax_h, h_cols, "effective level"),
                            (ax_rho, rho_cols, "state weight")):
        temps, bands = _quantile_bands(table, cols, (lo, mid, hi))
        for i, col in enumerate(cols):
            color = f"C{i}"
            ax.fill_between(temps, bands[col][0], bands[col][2],
                            color=color, alpha=0.25, linewidth=0)
            ax.plot(temps, bands[col][1], color=color,
                    label=f"{label} {i + 1} (median)")
        oracle_cols = [f"oracle_{c}" for c in cols]
        if all(c in table.data for c in oracle_cols) and not any(
                np.all(np.isnan(table.data[c])) for c in oracle_cols):
            for i, col in enumerate(oracle_cols):
                ax.plot(temps, _oracle_curves(table, [col])[col], "k--",
                        linewidth=0.9, label="exact" if i == 0 else None)
        ax.set_xscale("log")
        ax.set_ylabel(label + "s")
        ax.legend(fontsize=7, ncol=2)
    ax_rho.set_xlabel("temperature T / J")
    if spec.x_range:
        ax_rho.set_xlim(spec.x_range)
    if spec.y_range:
        ax_h.set_ylim(spec.y_range)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def heatmap_argmax_fields(table: SweepTable, value_column: str = "entropy",
                          quantile: float = 50.0) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Grid of the value column over (temperature, field) plus the field
    maximizing it at each temperature.

    Returns (temps ascending, fields ascending, grid[T, h], argmax fields).
    Cells are the ``quantile`` percentile over repeats.  Shared with the
    renderer so the marker positions are testable in isolation.
    """
    table.require("beta", "h", value_column)
    betas = np.unique(table.data["beta"])
    fields = np.unique(table.data["h"])
    if len(fields) < 2:
        raise ValueError("phase heatmap needs at least two field values")
    temps = 1.0 / betas[::-1]
    grid = np.empty((len(temps), len(fields)))
    for i, beta in enumerate(betas[::-1]):
        for j, h in enumerate(fields):
            sel = (table.data["beta"] == beta) & (table.data["h"] == h)
            if not np.any(sel):
                raise ValueError(f"no rows for beta={beta}, h={h}")
            grid[i, j] = np.percentile(table.data[value_column][sel], quantile)
    argmax = fields[np.argmax(grid, axis=1)]
    return temps, fields, grid, argmax


def _phase_heatmap(spec: PlotSpec, table: SweepTable):
    temps, fields, grid, argmax = heatmap_argmax_fields(
        table, spec.value_column, spec.quantiles[1])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(fields, temps, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=spec.value_column)
    if spec.mark_argmax:
        ax.plot(argmax, temps, "kx", markersize=7,
                label=f"max {spec.value_column} at fixed T")
        ax.legend(fontsize=8, loc="upper right")
    ax.set_yscale("log")
    ax.set_xlabel("field strength h / J")
    ax.set_ylabel("temperature T / J")
    ax.grid(False)
    if spec.x_range:
        ax.set_xlim(spec.x_range)
    if spec.y_range:
        ax.set_ylim(spec.y_range)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def _deviation_curves(spec: PlotSpec, table: SweepTable):
    table.require("beta", "deviation", spec.group_by)
    groups = np.unique(table.data[spec.group_by])
    groups = groups[~np.isnan(groups)] if np.any(np.isnan(groups)) else groups
    if len(groups) == 0:
        raise ValueError(f"no values in group column {spec.group_by!r}")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    betas = np.unique(table.data["beta"])
    temps = 1.0 / betas[::-1]
    for i, g in enumerate(groups):
        med = np.empty(len(betas))
        for j, beta in enumerate(betas[::-1]):
            sel = (table.data["beta"] == beta) & (table.data[spec.group_by] == g)
            med[j] = np.percentile(table.data["deviation"][sel],
                                   spec.quantiles[1])
        label = f"{spec.group_by} = {'inf' if np.isinf(g) else f'{g:g}'}"
        ax.plot(temps, med, marker="o", markersize=3, color=f"C{i}", label=label)
    ax.axhline(0.0, color="k", linewidth=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("temperature T / J")
    ax.set_ylabel("internal-energy deviation / J")
    ax.legend(fontsize=8)
    if spec.x_range:
        ax.set_xlim(spec.x_range)
    if spec.y_range:
        ax.set_ylim(spec.y_range)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig
