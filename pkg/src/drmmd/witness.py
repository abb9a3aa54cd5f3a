"""De-regularized MMD witness functions and the divergence estimators.

Given source particles y^{1:N} (empirical mu) and target samples x^{1:M}
(empirical pi), the closed-form witness over the Gram matrices is

    h*(.) =  2/(N lam) k(., y^{1:N}) 1_N
           - 2/(M lam) k(., x^{1:M}) 1_M
           - 2/(N lam) k(., x^{1:M}) (K_xx + M lam I)^{-1} K_xy 1_N
           + 2/(M lam) k(., x^{1:M}) (K_xx + M lam I)^{-1} K_xx 1_M,

so h* lives in the span of kernel sections at the source and target points
and is represented by two coefficient vectors. Only shifted solves against
K_xx are needed; (K_xx + M lam I)^{-1} K_xx v is computed through the identity
(K + sI)^{-1} K v = v - s (K + sI)^{-1} v, which avoids forming K_xx products.

The divergence value has the explicit quadratic form

    (1+lam)/lam [ 1'K_yy 1/N^2 + 1'K_xx 1/M^2 - 2 1'K_xy 1/(MN)
                  - 1'K_xy'(K_xx + M lam I)^{-1} K_xy 1 / N^2
                  + 2 1'K_xx (K_xx + M lam I)^{-1} K_xy 1 / (NM)
                  - 1'K_xx (K_xx + M lam I)^{-1} K_xx 1 / M^2 ],

which equals (1+lam)/2 [ mean_j h*(y_j) - mean_i h*(x_i) ].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalAbort
from .particles import ParticleSystem, as_points
from .regsolve import GramCache

__all__ = [
    "WitnessModel",
    "fit_witness",
    "drmmd_estimate",
    "drmmd_from_witness",
    "mmd2_estimate",
]

# slack applied to the analytic sup bounds before asserting them
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class WitnessModel:
    """Witness h* as coefficients over kernel sections at source/target points."""

    lam: float
    coeff_y: np.ndarray  # (N,), multiplies k(., y_j)
    coeff_x: np.ndarray  # (M,), multiplies k(., x_i)
    source_points: np.ndarray  # (N, d)
    target_points: np.ndarray  # (M, d)
    kernel: object

    @property
    def dim(self) -> int:
        return self.source_points.shape[1]

    def _centers(self) -> tuple[np.ndarray, np.ndarray]:
        centers = np.concatenate([self.source_points, self.target_points], axis=0)
        coeffs = np.concatenate([self.coeff_y, self.coeff_x])
        return centers, coeffs

    def eval_many(self, points) -> np.ndarray:
        """h*(z) at each row of ``points``."""
        pts = as_points(points, "points")
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {self.dim}")
        centers, coeffs = self._centers()
        vals = self.kernel.gram(pts, centers) @ coeffs
        sup = 2.0 * self.kernel.sup_bound() / self.lam
        assert np.max(np.abs(vals)) <= sup * (1.0 + _BOUND_SLACK) + 1e-12, (
            "witness exceeded its RKHS-derived sup bound"
        )
        return vals

    def eval(self, z) -> float:
        return float(self.eval_many(np.asarray(z, dtype=np.float64)[None, :])[0])

    def grad_many(self, points) -> np.ndarray:
        """grad h*(z) at each row of ``points``, shape (n, d)."""
        pts = as_points(points, "points")
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {self.dim}")
        centers, coeffs = self._centers()
        grads = self.kernel.weighted_grad_sum(pts, centers, coeffs)
        k1d = self.kernel.grad_sup_bound(self.dim)
        if k1d is not None:
            sup = 2.0 * np.sqrt(self.kernel.sup_bound() * k1d) / self.lam
            norms = np.linalg.norm(grads, axis=1)
            assert np.max(norms) <= sup * (1.0 + _BOUND_SLACK) + 1e-12, (
                "witness gradient exceeded its RKHS-derived sup bound"
            )
        return grads

    def grad(self, z) -> np.ndarray:
        return self.grad_many(np.asarray(z, dtype=np.float64)[None, :])[0]


def _validate(source: ParticleSystem, target: ParticleSystem, cache: GramCache, lam: float):
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if source.dim != target.dim:
        raise ValueError("source and target dimensions differ")
    if cache.m != len(target):
        raise ValueError(
            f"cache was built for {cache.m} target samples but target has {len(target)}"
        )


def fit_witness(
    source: ParticleSystem,
    target: ParticleSystem,
    kernel,
    cache: GramCache,
    lam: float,
    *,
    kxy: np.ndarray | None = None,
) -> WitnessModel:
    """Construct the witness for (source || target) at regularization lam.

    ``kxy`` may pass a precomputed k(target, source) Gram block; cost is
    O(M^2 + MN) given the cache.
    """
    _validate(source, target, cache, lam)
    n, m = len(source), len(target)
    if kxy is None:
        kxy = kernel.gram(target.positions, source.positions)
    ones_n = np.ones(n)
    ones_m = np.ones(m)
    # a = (K_xx + M lam I)^{-1} K_xy 1_N
    a = cache.solve(lam, kxy @ ones_n)
    # b = (K_xx + M lam I)^{-1} K_xx 1_M = 1_M - M lam (K_xx + M lam I)^{-1} 1_M
    b = ones_m - (m * lam) * cache.solve(lam, ones_m)
    coeff_y = (2.0 / (n * lam)) * ones_n
    coeff_x = -(2.0 / (m * lam)) * ones_m - (2.0 / (n * lam)) * a + (2.0 / (m * lam)) * b
    return WitnessModel(
        lam=lam,
        coeff_y=coeff_y,
        coeff_x=coeff_x,
        source_points=source.positions,
        target_points=target.positions,
        kernel=kernel,
    )


def drmmd_estimate(
    source: ParticleSystem,
    target: ParticleSystem,
    kernel,
    cache: GramCache,
    lam: float,
    *,
    kxy: np.ndarray | None = None,
    kyy_mean: float | None = None,
) -> float:
    """Sample divergence between source and target via the quadratic form.

    Nonnegative up to round-off; a value below -1e-12 aborts as a numerical
    error, smaller negatives are clipped to 0.
    """
    _validate(source, target, cache, lam)
    n, m = len(source), len(target)
    if kxy is None:
        kxy = kernel.gram(target.positions, source.positions)
    if kyy_mean is None:
        kyy_mean = float(np.mean(kernel.gram(source.positions, source.positions)))
    ones_m = np.ones(m)
    s = kxy @ np.ones(n)  # K_xy 1_N
    t = cache.matvec(ones_m)  # K_xx 1_M
    u = cache.solve(lam, s)
    w = cache.solve(lam, t)
    bracket = (
        kyy_mean
        + float(ones_m @ t) / m**2
        - 2.0 * float(np.sum(s)) / (m * n)
        - float(s @ u) / n**2
        + 2.0 * (float(np.sum(s)) - m * lam * float(np.sum(u))) / (n * m)
        - float(t @ w) / m**2
    )
    val = (1.0 + lam) / lam * bracket
    if val < -1e-12:
        raise NumericalAbort(f"divergence estimate is negative beyond tolerance: {val:.3e}")
    return max(val, 0.0)


def drmmd_from_witness(witness: WitnessModel) -> float:
    """Cross-check path: (1+lam)/2 [ mean h*(y) - mean h*(x) ]."""
    hy = witness.eval_many(witness.source_points)
    hx = witness.eval_many(witness.target_points)
    return (1.0 + witness.lam) / 2.0 * (float(np.mean(hy)) - float(np.mean(hx)))


def mmd2_estimate(source: ParticleSystem, target: ParticleSystem, kernel) -> float:
    """Plug-in V-statistic ||m_mu - m_pi||_H^2 (>= 0)."""
    kyy = kernel.gram(source.positions, source.positions)
    kxy = kernel.gram(target.positions, source.positions)
    kxx = kernel.gram(target.positions, target.positions)
    val = float(np.mean(kyy)) - 2.0 * float(np.mean(kxy)) + float(np.mean(kxx))
    return max(val, 0.0)
