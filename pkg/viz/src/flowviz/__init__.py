"""Standalone figure generation for particle-flow run directories.

Reads only the documented CSV/YAML/JSON run-directory schemas; does not
import the flow library.
"""

from .figures import METRICS, FigureSpec, build_metrics_figure, plot_metrics, plot_snapshots
from .io import SchemaError

__version__ = "0.1.0"

__all__ = [
    "METRICS",
    "FigureSpec",
    "SchemaError",
    "build_metrics_figure",
    "plot_metrics",
    "plot_snapshots",
]
