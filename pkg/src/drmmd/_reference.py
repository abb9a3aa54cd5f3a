"""Slow reference implementations used only to validate the fast paths.

Not public API. These deliberately avoid the Woodbury/Gram-cache route: the
witness is represented on the joint span of kernel sections at the source and
target points by solving one dense (M+N) x (M+N) linear system, and the
divergence is evaluated spectrally after orthonormalizing that span. Tests
compare the production code against these at tight tolerances.
"""

from __future__ import annotations

import numpy as np

from .particles import ParticleSystem


def dense_subspace_witness_coeffs(
    source: ParticleSystem, target: ParticleSystem, kernel, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients c over sections at [target; source] solving (Sigma + lam I) h = 2(m_mu - m_pi).

    Returns (centers, coeffs) with centers = rows of [x_1..x_M, y_1..y_N].
    Matching section coefficients gives, for the x rows,
    (1/M) h(x_i) + lam c_i = -2/M and, for the y rows, lam c_j = 2/N.
    """
    x = target.positions
    y = source.positions
    m, n = x.shape[0], y.shape[0]
    centers = np.concatenate([x, y], axis=0)
    kxp = kernel.gram(x, centers)  # (M, M+N)
    a = np.zeros((m + n, m + n))
    a[:m, :] = kxp / m
    a[:m, :m] += lam * np.eye(m)
    a[m:, m:] = lam * np.eye(n)
    rhs = np.concatenate([-2.0 / m * np.ones(m), 2.0 / n * np.ones(n)])
    coeffs = np.linalg.solve(a, rhs)
    return centers, coeffs


def dense_subspace_witness_eval(
    source: ParticleSystem, target: ParticleSystem, kernel, lam: float, probes: np.ndarray
) -> np.ndarray:
    """h*(z) at each probe via the dense-subspace representation."""
    centers, coeffs = dense_subspace_witness_coeffs(source, target, kernel, lam)
    return kernel.gram(probes, centers) @ coeffs


def spectral_drmmd(
    source: ParticleSystem, target: ParticleSystem, kernel, lam: float
) -> float:
    """(1+lam) sum_i <m_mu - m_pi, u_i>^2 / (sigma_i + lam) on the joint span.

    The span of sections at all M+N points is orthonormalized through the
    eigendecomposition of its Gram matrix; the covariance operator of the
    target empirical measure is then diagonalized in that basis.
    """
    x = target.positions
    y = source.positions
    m, n = x.shape[0], y.shape[0]
    centers = np.concatenate([x, y], axis=0)
    g = kernel.gram(centers, centers)
    g = 0.5 * (g + g.T)
    vals, vecs = np.linalg.eigh(g)
    keep = vals > 1e-12 * max(float(vals.max()), 1.0)
    q = vecs[:, keep] / np.sqrt(vals[keep])[None, :]
    # basis values at target points: phi_l(x_i) = (K_xP q_l)_i
    phi_x = kernel.gram(x, centers) @ q
    sigma = (phi_x.T @ phi_x) / m
    c_u = np.concatenate([-np.ones(m) / m, np.ones(n) / n])
    u_coords = q.T @ (g @ c_u)
    svals, svecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    proj = svecs.T @ u_coords
    return float((1.0 + lam) * np.sum(proj**2 / (np.maximum(svals, 0.0) + lam)))
