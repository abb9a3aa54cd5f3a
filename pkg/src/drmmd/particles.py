"""Particle clouds: the state moved by the flow and the target it chases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParticleSystem:
    """N points in R^d plus a generation counter.

    ``positions`` is always a float64 (N, d) array. ``generation`` counts how
    many descent updates produced this state (0 for freshly sampled clouds).
    """

    positions: np.ndarray
    generation: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] == 0:
            raise ValueError(f"positions must be a nonempty (N, d) array, got shape {pos.shape}")
        if self.generation < 0:
            raise ValueError("generation must be >= 0")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def with_positions(self, positions: np.ndarray) -> "ParticleSystem":
        """Next-generation system at new positions."""
        return ParticleSystem(positions, generation=self.generation + 1)


def as_points(points, name: str = "points") -> np.ndarray:
    """Coerce to a float64 (n, d) array; reject empty or ragged input."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty (n, d) array, got shape {arr.shape}")
    return arr
