"""Benchmark datasets and the student/teacher setup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import NeuralFeatureKernel
from .particles import ParticleSystem

__all__ = [
    "RING_CENTERS",
    "gen_three_rings",
    "gen_gaussian",
    "gen_gaussian_mixture",
    "StudentTeacherSetup",
    "setup_student_teacher",
]

RING_CENTERS = ((0.0, 0.0), (2.5, 0.0), (5.0, 0.0))
RING_RADIUS = 1.0


def gen_three_rings(
    n: int,
    noise: float = 0.02,
    seed: int = 0,
    *,
    radius: float = RING_RADIUS,
    centers=RING_CENTERS,
) -> ParticleSystem:
    """n points round-robined over three circles, perturbed radially.

    Point i sits on ring i mod 3; within a ring the angles are evenly spaced.
    ``noise`` is the standard deviation of the Gaussian radial perturbation.
    """
    if n < 3:
        raise ValueError("need n >= 3 for three rings")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    pts = np.empty((n, 2))
    for k in range(3):
        count = len(range(k, n, 3))
        angles = 2.0 * np.pi * np.arange(count) / count
        radii = radius + noise * rng.standard_normal(count)
        ring = centers[k] + radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
        pts[k::3] = ring
    return ParticleSystem(pts)


def gen_gaussian(
    n: int, mean, cov_scale: float, seed: int = 0, *, dim: int | None = None
) -> ParticleSystem:
    """n i.i.d. samples from N(mean, cov_scale * I)."""
    if n < 1:
        raise ValueError("need n >= 1")
    if cov_scale < 0:
        raise ValueError("cov_scale must be >= 0")
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    if dim is not None and mean.size == 1:
        mean = np.full(dim, float(mean[0]))
    rng = np.random.default_rng(seed)
    pts = mean[None, :] + np.sqrt(cov_scale) * rng.standard_normal((n, mean.size))
    return ParticleSystem(pts)


def gen_gaussian_mixture(
    n: int, means, cov_scale: float, seed: int = 0
) -> ParticleSystem:
    """n samples from an equal-weight Gaussian mixture (round-robin over components)."""
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2 or means.shape[0] < 1:
        raise ValueError("means must be a (k, d) array")
    rng = np.random.default_rng(seed)
    comp = np.arange(n) % means.shape[0]
    pts = means[comp] + np.sqrt(cov_scale) * rng.standard_normal((n, means.shape[1]))
    return ParticleSystem(pts)


def sample_sphere(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform on the unit sphere in R^dim."""
    z = rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class StudentTeacherSetup:
    teacher: ParticleSystem
    student: ParticleSystem
    kernel: NeuralFeatureKernel
    validation_kernel: NeuralFeatureKernel


def setup_student_teacher(
    m_teacher: int = 10,
    n_student: int = 1000,
    *,
    input_dim: int = 50,
    hidden_dim: int = 3,
    z_train: int = 1000,
    z_validation: int = 1000,
    z_batch_size: int = 100,
    seed: int = 0,
) -> StudentTeacherSetup:
    """Teacher/student particle clouds over network parameters plus their kernel.

    Teacher particles are N(0, I) in parameter space, students N(0, 1e-3 I).
    Probe inputs are uniform on S^{input_dim - 1}; the train pool feeds the
    per-iteration batch of size ``z_batch_size`` and the held-out validation
    set backs the evaluation kernel.
    """
    rng = np.random.default_rng(seed)
    dummy = NeuralFeatureKernel(
        input_dim=input_dim, hidden_dim=hidden_dim, z_batch=np.zeros((1, input_dim))
    )
    d = dummy.param_dim
    teacher = ParticleSystem(rng.standard_normal((m_teacher, d)))
    student = ParticleSystem(np.sqrt(1e-3) * rng.standard_normal((n_student, d)))
    train = sample_sphere(z_train, input_dim, rng)
    validation = sample_sphere(z_validation, input_dim, rng)
    batch = train[rng.choice(z_train, size=min(z_batch_size, z_train), replace=False)]
    kernel = NeuralFeatureKernel(
        input_dim=input_dim, hidden_dim=hidden_dim, z_batch=batch, z_pool=train
    )
    validation_kernel = NeuralFeatureKernel(
        input_dim=input_dim, hidden_dim=hidden_dim, z_batch=validation
    )
    return StudentTeacherSetup(teacher, student, kernel, validation_kernel)
