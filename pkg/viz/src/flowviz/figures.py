"""Figure construction from persisted run directories.

Output is deterministic for fixed inputs: a fixed style, a pinned SVG hash
salt, and no timestamps embedded in the images.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from .io import (
    SchemaError,
    read_metrics_table,
    read_point_matrix,
    read_summary,
    run_label,
    snapshot_iterations,
)

__all__ = ["FigureSpec", "METRICS", "build_metrics_figure", "plot_metrics", "plot_snapshots"]

METRICS = ("mmd2", "w2", "drmmd", "lambda")

plt.rcParams.update(
    {
        "svg.hashsalt": "flowviz",
        "figure.figsize": (6.0, 4.0),
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)

_SAVE_KW = {"metadata": {"Date": None}}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: which run directories, which metric, where to write."""

    run_dirs: tuple
    out: str
    metric: str = "mmd2"
    log_y: bool = False
    snapshot_iters: tuple = field(default_factory=tuple)
    gif: bool = False

    def __post_init__(self):
        if not self.run_dirs:
            raise SchemaError("at least one run directory is required")
        if self.metric not in METRICS:
            raise SchemaError(f"unknown metric {self.metric!r}, expected one of {METRICS}")


def _save_both(fig, out_base: Path) -> list[Path]:
    out_base.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for ext in ("png", "svg"):
        p = out_base.with_suffix(f".{ext}")
        fig.savefig(p, **_SAVE_KW)
        paths.append(p)
    return paths


def build_metrics_figure(spec: FigureSpec):
    """One labeled curve per run directory for the requested metric."""
    fig, ax = plt.subplots()
    for run_dir in spec.run_dirs:
        table = read_metrics_table(Path(run_dir) / "metrics.csv")
        if spec.metric not in table:
            raise SchemaError(
                f"{Path(run_dir) / 'metrics.csv'}: missing column {spec.metric!r}"
            )
        ax.plot(table["iteration"], table[spec.metric], label=run_label(run_dir))
    ax.set_xlabel("iteration")
    ax.set_ylabel(spec.metric)
    if spec.log_y:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    return fig


def plot_metrics(spec: FigureSpec) -> list[Path]:
    """Render the metric-curve figure as PNG and SVG; returns written paths."""
    fig = build_metrics_figure(spec)
    try:
        return _save_both(fig, Path(spec.out))
    finally:
        plt.close(fig)


def _snapshot_frame(run_dir: Path, iteration: int, target: np.ndarray):
    source = read_point_matrix(run_dir / f"snapshot_{iteration}.csv")
    fig, ax = plt.subplots()
    ax.scatter(target[:, 0], target[:, 1], s=12, c="tab:blue", alpha=0.6, label="target")
    ax.scatter(source[:, 0], source[:, 1], s=12, c="tab:orange", alpha=0.8, label="particles")
    ax.set_title(f"iteration {iteration}")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="upper right")
    fig.tight_layout()
    return fig


def _resolve_iters(spec: FigureSpec, run_dir: Path) -> list[int]:
    available = snapshot_iterations(run_dir)
    if not available:
        raise SchemaError(f"{run_dir}: no snapshot files found")
    if spec.snapshot_iters:
        missing = [i for i in spec.snapshot_iters if i not in available]
        if missing:
            raise SchemaError(
                f"{run_dir}: no snapshot for iterations {missing}; available: {available}"
            )
        return list(spec.snapshot_iters)
    # default: initial and final state
    try:
        last = int(read_summary(run_dir)["n_max"])
    except (OSError, KeyError, SchemaError):
        last = available[-1]
    if last not in available:
        last = available[-1]
    return sorted({available[0], last})


def plot_snapshots(spec: FigureSpec) -> list[Path]:
    """Scatter frames of source particles over the target; optional GIF."""
    run_dir = Path(spec.run_dirs[0])
    target = read_point_matrix(run_dir / "target.csv")
    if target.shape[1] != 2:
        raise SchemaError(f"{run_dir}: snapshot plots need 2-D clouds, got d={target.shape[1]}")
    iters = _resolve_iters(spec, run_dir)
    out_dir = Path(spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    png_frames: list[Path] = []
    for it in iters:
        fig = _snapshot_frame(run_dir, it, target)
        try:
            paths = _save_both(fig, out_dir / f"snapshot_{it}")
        finally:
            plt.close(fig)
        written.extend(paths)
        png_frames.append(paths[0])
    if spec.gif:
        gif_path = out_dir / "flow.gif"
        frames = [Image.open(p).convert("P", palette=Image.ADAPTIVE) for p in png_frames]
        frames[0].save(
            gif_path, save_all=True, append_images=frames[1:], duration=400, loop=0
        )
        written.append(gif_path)
    return written
