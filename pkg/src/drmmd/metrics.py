"""Evaluation metrics between particle clouds."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .particles import ParticleSystem
from .witness import mmd2_estimate

__all__ = ["MetricReport", "w2_exact", "report"]


@dataclass(frozen=True)
class MetricReport:
    """Metrics of one cloud against the target; w2 is None when sizes differ."""

    mmd2: float
    w2: float | None
    iteration: int
    wall_ms: float


def w2_exact(a: ParticleSystem, b: ParticleSystem) -> float:
    """Exact Wasserstein-2 distance between equal-size uniform clouds.

    sqrt(min over permutations of (1/N) sum_i ||a_i - b_{sigma(i)}||^2),
    solved as an O(N^3) assignment problem; optimal for empirical measures of
    equal cardinality.
    """
    if len(a) != len(b):
        raise ValueError(f"clouds must have equal size, got {len(a)} and {len(b)}")
    if a.dim != b.dim:
        raise ValueError("clouds have different dimension")
    cost = cdist(a.positions, b.positions, metric="sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].sum() / len(a)))


def report(
    system: ParticleSystem, target: ParticleSystem, kernel, iteration: int
) -> MetricReport:
    """Bundle MMD^2 and (when sizes match) exact W2 against the target."""
    t0 = time.perf_counter()
    mmd2 = mmd2_estimate(system, target, kernel)
    w2 = w2_exact(system, target) if len(system) == len(target) else None
    wall_ms = (time.perf_counter() - t0) * 1e3
    return MetricReport(mmd2=mmd2, w2=w2, iteration=iteration, wall_ms=wall_ms)
