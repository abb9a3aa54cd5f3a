"""Regularized inversion of the target Gram matrix.

The witness construction repeatedly needs (K_xx + M lam I)^{-1} v for varying
lam. A one-time symmetric eigendecomposition of K_xx amortizes every later
solve to O(M^2) regardless of lam; a Cholesky factorization of the shifted
matrix is kept as a fast path when lam is fixed for the whole run.

A module-level counter tracks how many O(M^3) factorizations have happened,
so tests can assert the fixed-lam precompute contract (one factorization per
run).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import NumericalAbort

__all__ = ["GramCache", "build_cache", "solve_shifted", "factorization_count"]

_FACTORIZATIONS = 0


def factorization_count() -> int:
    """Total O(M^3) factorizations performed since import."""
    return _FACTORIZATIONS


def _bump():
    global _FACTORIZATIONS
    _FACTORIZATIONS += 1


@dataclass(frozen=True)
class GramCache:
    """Factorized K_xx enabling shifted solves.

    Eigen mode stores the full spectral decomposition (eigenvalues descending,
    negatives of round-off magnitude clipped at 0). Cholesky mode stores the
    factor of (K_xx + M lam I) for one pinned lam.
    """

    m: int
    mode: str  # "eigen" | "cholesky"
    kxx: np.ndarray
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    chol: tuple | None = field(default=None, repr=False)
    lam: float | None = None

    def solve(self, lam: float, v) -> np.ndarray:
        return solve_shifted(self, lam, v)

    def matvec(self, v) -> np.ndarray:
        """K_xx @ v."""
        v = np.asarray(v, dtype=np.float64).ravel()
        if v.shape[0] != self.m:
            raise ValueError(f"vector length {v.shape[0]} does not match cache size {self.m}")
        return self.kxx @ v


def build_cache(kxx, mode: str = "eigen", lam: float | None = None) -> GramCache:
    """Factorize a square symmetric Gram matrix once.

    mode="eigen" amortizes solves for any shift; mode="cholesky" pins a single
    lam (required argument) and factors (K_xx + M lam I).
    """
    kxx = np.asarray(kxx, dtype=np.float64)
    if kxx.ndim != 2 or kxx.shape[0] != kxx.shape[1]:
        raise ValueError(f"Gram matrix must be square, got shape {kxx.shape}")
    scale = max(1.0, float(np.max(np.abs(kxx))) if kxx.size else 1.0)
    if float(np.max(np.abs(kxx - kxx.T))) > 1e-8 * scale:
        raise ValueError("Gram matrix is not symmetric")
    m = kxx.shape[0]
    kxx = 0.5 * (kxx + kxx.T)

    if mode == "eigen":
        try:
            vals, vecs = np.linalg.eigh(kxx)
        except np.linalg.LinAlgError as exc:
            raise NumericalAbort(
                "eigendecomposition failed to converge "
                f"(m={m}, trace={np.trace(kxx):.3e}, max|K|={scale:.3e})"
            ) from exc
        vals = vals[::-1].copy()
        vecs = vecs[:, ::-1].copy()
        trace = float(np.trace(kxx))
        allow = 1e-10 * max(trace, 0.0) + 1e-12
        worst = float(vals.min()) if m else 0.0
        if worst < -allow:
            raise NumericalAbort(
                f"Gram matrix is not PSD: eigenvalue {worst:.3e} below -{allow:.3e}"
            )
        np.maximum(vals, 0.0, out=vals)
        _bump()
        return GramCache(m=m, mode="eigen", kxx=kxx, eigenvalues=vals, eigenvectors=vecs)

    if mode == "cholesky":
        if lam is None or not lam > 0:
            raise ValueError("cholesky mode requires a positive fixed lam")
        shifted = kxx + (m * lam) * np.eye(m)
        try:
            factor = cho_factor(shifted, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalAbort(
                f"Cholesky factorization failed (m={m}, lam={lam:.3e})"
            ) from exc
        _bump()
        return GramCache(m=m, mode="cholesky", kxx=kxx, chol=factor, lam=float(lam))

    raise ValueError(f"unknown cache mode {mode!r}")


def solve_shifted(cache: GramCache, lam: float, v) -> np.ndarray:
    """w with (K_xx + M lam I) w = v."""
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape[0] != cache.m:
        raise ValueError(f"vector length {v.shape[0]} does not match cache size {cache.m}")
    if cache.mode == "eigen":
        u = cache.eigenvectors
        coeff = (u.T @ v) / (cache.eigenvalues + cache.m * lam)
        return u @ coeff
    if lam != cache.lam:
        raise ValueError(
            f"cache was factorized at lam={cache.lam}, cannot solve at lam={lam}"
        )
    return cho_solve(cache.chol, v)
