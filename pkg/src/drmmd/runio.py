"""Run-directory persistence.

Each algorithm run owns one directory with a fixed file schema, consumable by
the standalone figure scripts and by spreadsheets:

    config.yaml            resolved config echo
    metrics.csv            header + one row per iteration:
                           iteration,lambda,drmmd,mmd2,w2
                           (w2 empty when source/target sizes differ)
    timings.csv            iteration,wall_ms (not covered by determinism)
    snapshot_<iter>.csv    particle positions, one row per particle
    target.csv             the target cloud
    summary.json           final/initial metrics and run metadata

All floats are written with 17 significant digits and '.' as the decimal
separator; metrics.csv is byte-identical across runs with the same config and
seed.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .flow import RunRecord
from .particles import ParticleSystem

__all__ = ["write_run_dir", "read_metrics", "METRICS_COLUMNS"]

METRICS_COLUMNS = ("iteration", "lambda", "drmmd", "mmd2", "w2")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_matrix(path: Path, mat: np.ndarray):
    rows = (",".join(_fmt(v) for v in row) for row in np.atleast_2d(mat))
    path.write_text("\n".join(rows) + "\n")


def write_run_dir(
    run_dir,
    record: RunRecord,
    config_echo: str,
    target: ParticleSystem,
    extra_summary: dict | None = None,
) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    (run_dir / "config.yaml").write_text(config_echo)

    lines = [",".join(METRICS_COLUMNS)]
    for r in record.rows:
        w2 = "" if r.w2 is None else _fmt(r.w2)
        lines.append(
            f"{r.iteration},{_fmt(r.lam)},{_fmt(r.drmmd)},{_fmt(r.mmd2)},{w2}"
        )
    (run_dir / "metrics.csv").write_text("\n".join(lines) + "\n")

    tlines = ["iteration,wall_ms"]
    tlines += [f"{r.iteration},{_fmt(r.wall_ms)}" for r in record.rows]
    (run_dir / "timings.csv").write_text("\n".join(tlines) + "\n")

    for it, positions in record.snapshots:
        _write_matrix(run_dir / f"snapshot_{it}.csv", positions)
    _write_matrix(run_dir / "target.csv", target.positions)

    first, last = record.rows[0], record.rows[-1]
    summary = {
        "algorithm": record.algorithm,
        "seed": record.seed,
        "n_max": last.iteration,
        "rows": len(record.rows),
        "factorizations": record.factorizations,
        "snapshot_iterations": [it for it, _ in record.snapshots],
        "initial": {"drmmd": first.drmmd, "mmd2": first.mmd2, "w2": first.w2},
        "final": {"drmmd": last.drmmd, "mmd2": last.mmd2, "w2": last.w2},
        "total_wall_ms": sum(r.wall_ms for r in record.rows),
    }
    if extra_summary:
        summary.update(extra_summary)
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return run_dir


def read_metrics(path) -> dict[str, np.ndarray]:
    """Load a metrics.csv back into column arrays (NaN for empty w2)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    cols: dict[str, list[float]] = {name: [] for name in header}
    for line in text[1:]:
        for name, valuestr in zip(header, line.split(",")):
            cols[name].append(float(valuestr) if valuestr else np.nan)
    return {name: np.asarray(vals) for name, vals in cols.items()}
