"""Strict readers for the run-directory file schemas.

A run directory contains metrics.csv (header iteration,lambda,drmmd,mmd2,w2;
empty w2 cells mean "unavailable"), snapshot_<iter>.csv and target.csv
(headerless coordinate matrices), config.yaml (config echo), and
summary.json. This package never imports the flow library; these files are
its only interface.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
import yaml

__all__ = [
    "SchemaError",
    "read_metrics_table",
    "read_point_matrix",
    "run_label",
    "snapshot_iterations",
    "read_summary",
]


class SchemaError(ValueError):
    """A run-directory file does not match its documented schema."""


def read_metrics_table(path) -> dict[str, np.ndarray]:
    """Parse metrics.csv into column arrays; empty cells become NaN.

    Raises SchemaError naming the file and the offending line number on any
    malformed content.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty metrics file")
    header = lines[0].split(",")
    if len(set(header)) != len(header) or "iteration" not in header:
        raise SchemaError(f"{path}: line 1: bad header {lines[0]!r}")
    columns: dict[str, list[float]] = {name: [] for name in header}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(
                f"{path}: line {lineno}: expected {len(header)} cells, got {len(cells)}"
            )
        for name, cell in zip(header, cells):
            if cell == "":
                columns[name].append(np.nan)
                continue
            try:
                columns[name].append(float(cell))
            except ValueError:
                raise SchemaError(
                    f"{path}: line {lineno}: cannot parse {cell!r} in column {name}"
                ) from None
    return {name: np.asarray(vals) for name, vals in columns.items()}


def read_point_matrix(path) -> np.ndarray:
    """Headerless CSV of particle coordinates, one row per particle."""
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(c) for c in line.split(",")])
        except ValueError:
            raise SchemaError(f"{path}: line {lineno}: cannot parse coordinates") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise SchemaError(f"{path}: empty or ragged coordinate matrix")
    return np.asarray(rows)


def run_label(run_dir) -> str:
    """Legend label for a run directory, taken from its config echo."""
    cfg_path = Path(run_dir) / "config.yaml"
    if cfg_path.exists():
        try:
            cfg = yaml.safe_load(cfg_path.read_text())
            algos = cfg.get("algorithms") or []
            if algos and isinstance(algos[0], dict) and algos[0].get("name"):
                return str(algos[0]["name"])
        except yaml.YAMLError:
            pass
    return Path(run_dir).name


def snapshot_iterations(run_dir) -> list[int]:
    """Sorted iterations with a snapshot file present."""
    out = []
    for p in Path(run_dir).glob("snapshot_*.csv"):
        m = re.fullmatch(r"snapshot_(\d+)\.csv", p.name)
        if m:
            out.append(int(m.group(1)))
    return sorted(out)


def read_summary(run_dir) -> dict:
    path = Path(run_dir) / "summary.json"
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
