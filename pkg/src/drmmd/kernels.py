"""Kernel families: pointwise evaluation, first-argument gradients, and Gram assembly.

Three families are shipped:

* ``GaussianKernel``        k(x, y) = exp(-0.5 ||x - y||^2 / l^2)
* ``InverseMultiquadric``   k(x, y) = (c + ||x - y||^2)^(-1/2)
* ``NeuralFeatureKernel``   k(x, y) = mean_b psi(z_b, x) psi(z_b, y), where the
  evaluation points x, y are flattened two-layer network parameters and the
  z_b are probe inputs. The output nonlinearity G(u) = exp(-u^2/4) keeps
  |psi| <= 1 and hence k(x, x) <= 1.

Every kernel exposes the same surface:

  eval(x, y)                      scalar k(x, y)
  grad1(x, y)                     gradient in the first argument, shape (d,)
  gram(rows, cols)                (n, m) matrix of pairwise evaluations
  sup_bound()                     K with k(x, x) <= K for all x
  grad_sup_bound(dim)             K_1d with ||grad1 k(x, .)||_H^2 <= K_1d per
                                  point (None when no closed form exists)
  weighted_grad_sum(P, C, w)      sum_j w_j grad1 k(p_i, c_j) for every row of P

All arithmetic is float64. Kernel objects are immutable and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .particles import as_points

__all__ = [
    "GaussianKernel",
    "InverseMultiquadric",
    "NeuralFeatureKernel",
    "kernel_from_name",
]


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances.

    Computed from coordinate differences (not the inner-product expansion) so
    that s_ii is exactly 0 for identical points and s_ij == s_ji bitwise.
    Chunked over rows to keep the (chunk, m, d) intermediate small.
    """
    n, d = a.shape
    m = b.shape[0]
    out = np.empty((n, m))
    chunk = max(1, 4_000_000 // max(1, m * d))
    for i in range(0, n, chunk):
        diff = a[i : i + chunk, None, :] - b[None, :, :]
        out[i : i + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _check_pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"points have mismatched dimensions {x.shape[0]} vs {y.shape[0]}")
    return x, y


class _RadialKernel:
    """Shared machinery for kernels of the form k(x, y) = phi(||x - y||^2)."""

    def _phi(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _phi_prime(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval(self, x, y) -> float:
        # routed through the pairwise path so gram() is bit-exact with eval loops
        x, y = _check_pair(x, y)
        return float(self._phi(_sq_dists(x[None, :], y[None, :]))[0, 0])

    def grad1(self, x, y) -> np.ndarray:
        # grad_x phi(||x-y||^2) = 2 phi'(s) (x - y)
        x, y = _check_pair(x, y)
        s = _sq_dists(x[None, :], y[None, :])[0, 0]
        return 2.0 * float(self._phi_prime(s)) * (x - y)

    def gram(self, rows, cols) -> np.ndarray:
        rows = as_points(rows, "rows")
        cols = as_points(cols, "cols")
        if rows.shape[1] != cols.shape[1]:
            raise ValueError("row and column point sets have different dimension")
        return self._phi(_sq_dists(rows, cols))

    def weighted_grad_sum(self, points, centers, weights) -> np.ndarray:
        points = as_points(points, "points")
        centers = as_points(centers, "centers")
        if points.shape[1] != centers.shape[1]:
            raise ValueError("points and centers have different dimension")
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape[0] != centers.shape[0]:
            raise ValueError("weights length does not match centers")
        p = self._phi_prime(_sq_dists(points, centers)) * w[None, :]
        rowsum = p.sum(axis=1)
        return 2.0 * (rowsum[:, None] * points - p @ centers)


@dataclass(frozen=True)
class GaussianKernel(_RadialKernel):
    """k(x, y) = exp(-0.5 ||x - y||^2 / bandwidth^2); K = 1."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def _phi(self, s):
        return np.exp(-0.5 * s / (self.bandwidth * self.bandwidth))

    def _phi_prime(self, s):
        l2 = self.bandwidth * self.bandwidth
        return -0.5 / l2 * np.exp(-0.5 * s / l2)

    def sup_bound(self) -> float:
        return 1.0

    def grad_sup_bound(self, dim: int) -> float:
        # ||grad1 k(x, .)||_H^2 = sum_i d^2k/dx_i dy_i |_{y=x} = d / l^2
        return dim / (self.bandwidth * self.bandwidth)


@dataclass(frozen=True)
class InverseMultiquadric(_RadialKernel):
    """k(x, y) = (offset + ||x - y||^2)^(-1/2); K = offset^(-1/2).

    With offset = 1 this keeps K = 1, so the K <= 1 simplifications used
    elsewhere apply to every shipped kernel.
    """

    offset: float = 1.0

    def __post_init__(self):
        if not self.offset > 0:
            raise ValueError("offset must be positive")

    def _phi(self, s):
        return (self.offset + s) ** (-0.5)

    def _phi_prime(self, s):
        return -0.5 * (self.offset + s) ** (-1.5)

    def sup_bound(self) -> float:
        return self.offset ** (-0.5)

    def grad_sup_bound(self, dim: int) -> float:
        # d^2k/dx_i dy_i |_{y=x} = offset^(-3/2) per coordinate
        return dim * self.offset ** (-1.5)


@dataclass(frozen=True)
class NeuralFeatureKernel:
    """Data-defined kernel from two-layer network feature maps.

    An evaluation point x packs the parameters (W0, b0, W1, b1) of

        psi(z, x) = G(b1 + W1 relu(W0 z + b0)),   G(u) = exp(-u^2 / 4),

    in that order, so the parameter dimension is
    hidden_dim * input_dim + hidden_dim + hidden_dim + 1. The kernel value is
    the mean of psi(z_b, x) psi(z_b, y) over the stored z_batch. The batch is
    fixed between calls; ``resample`` draws a fresh batch from ``z_pool`` so a
    flow can refresh it once per iteration. ReLU takes derivative 0 at 0.
    """

    input_dim: int
    hidden_dim: int
    z_batch: np.ndarray
    z_pool: np.ndarray | None = None

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ValueError("input_dim and hidden_dim must be >= 1")
        zb = as_points(self.z_batch, "z_batch")
        if zb.shape[1] != self.input_dim:
            raise ValueError("z_batch columns must equal input_dim")
        object.__setattr__(self, "z_batch", zb)
        if self.z_pool is not None:
            zp = as_points(self.z_pool, "z_pool")
            if zp.shape[1] != self.input_dim:
                raise ValueError("z_pool columns must equal input_dim")
            object.__setattr__(self, "z_pool", zp)

    @property
    def param_dim(self) -> int:
        h, p = self.hidden_dim, self.input_dim
        return h * p + h + h + 1

    def resample(self, rng: np.random.Generator) -> "NeuralFeatureKernel":
        """Fresh z_batch of the same size drawn from z_pool (no-op without a pool)."""
        if self.z_pool is None:
            return self
        idx = rng.choice(self.z_pool.shape[0], size=self.z_batch.shape[0], replace=False)
        return replace(self, z_batch=self.z_pool[idx])

    def _unpack(self, pts: np.ndarray):
        h, p = self.hidden_dim, self.input_dim
        n = pts.shape[0]
        if pts.shape[1] != self.param_dim:
            raise ValueError(
                f"points have dimension {pts.shape[1]}, expected param_dim {self.param_dim}"
            )
        w0 = pts[:, : h * p].reshape(n, h, p)
        b0 = pts[:, h * p : h * p + h]
        w1 = pts[:, h * p + h : h * p + 2 * h]
        b1 = pts[:, -1]
        return w0, b0, w1, b1

    def _forward(self, pts: np.ndarray):
        """Per-point feature values over the batch plus backprop intermediates."""
        w0, b0, w1, b1 = self._unpack(pts)
        pre = np.einsum("nhp,bp->nbh", w0, self.z_batch) + b0[:, None, :]
        act = np.maximum(pre, 0.0)
        out = b1[:, None] + np.einsum("nbh,nh->nb", act, w1)
        psi = np.exp(-0.25 * out * out)
        return psi, pre, act, out, w1

    def features(self, points) -> np.ndarray:
        """psi(z_b, x_i) for every point and batch element, shape (n, B)."""
        pts = as_points(points, "points")
        return self._forward(pts)[0]

    def eval(self, x, y) -> float:
        x, y = _check_pair(x, y)
        fx = self.features(x[None, :])[0]
        fy = self.features(y[None, :])[0]
        return float(fx @ fy) / self.z_batch.shape[0]

    def gram(self, rows, cols) -> np.ndarray:
        fr = self.features(rows)
        fc = self.features(cols)
        return (fr @ fc.T) / self.z_batch.shape[0]

    def grad1(self, x, y) -> np.ndarray:
        x, y = _check_pair(x, y)
        return self.weighted_grad_sum(x[None, :], y[None, :], np.ones(1))[0]

    def weighted_grad_sum(self, points, centers, weights) -> np.ndarray:
        pts = as_points(points, "points")
        ctr = as_points(centers, "centers")
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape[0] != ctr.shape[0]:
            raise ValueError("weights length does not match centers")
        bsz = self.z_batch.shape[0]
        # t_b = sum_j w_j psi(z_b, c_j); then sum_j w_j grad1 k(x, c_j)
        #     = (1/B) sum_b t_b grad_x psi(z_b, x)
        t = self.features(ctr).T @ w
        psi, pre, act, out, w1 = self._forward(pts)
        gprime = -0.5 * out * psi
        c = gprime * t[None, :]
        db1 = c.sum(axis=1) / bsz
        dw1 = np.einsum("nb,nbh->nh", c, act) / bsz
        gate = c[:, :, None] * (w1[:, None, :] * (pre > 0.0))
        db0 = gate.sum(axis=1) / bsz
        dw0 = np.einsum("nbh,bp->nhp", gate, self.z_batch) / bsz
        n = pts.shape[0]
        return np.concatenate(
            [dw0.reshape(n, -1), db0, dw1, db1[:, None]], axis=1
        )

    def sup_bound(self) -> float:
        return 1.0

    def grad_sup_bound(self, dim: int) -> None:
        # no closed form for this family
        return None


def kernel_from_name(family: str, **params):
    """Build a kernel from its config-file family name."""
    fam = family.lower().replace("-", "_")
    if fam == "gaussian":
        return GaussianKernel(bandwidth=params["bandwidth"])
    if fam in ("imq", "inverse_multiquadric"):
        return InverseMultiquadric(offset=params.get("offset", 1.0))
    if fam in ("neural", "neural_feature"):
        return NeuralFeatureKernel(
            input_dim=params["input_dim"],
            hidden_dim=params["hidden_dim"],
            z_batch=params["z_batch"],
            z_pool=params.get("z_pool"),
        )
    raise ValueError(f"unknown kernel family {family!r}")
