"""Publication figures from sweep CSV files: eigenvalue-vs-temperature
curves with quantile bands, entropy phase heatmaps with per-temperature
argmax markers, and deviation curves grouped by a sweep axis."""

from .plotspec import PlotSpec, SweepTable, load_plotspec, load_tables
from .figures import heatmap_argmax_fields, plot

__version__ = "0.1.0"

__all__ = [
    "PlotSpec",
    "SweepTable",
    "heatmap_argmax_fields",
    "load_plotspec",
    "load_tables",
    "plot",
]
