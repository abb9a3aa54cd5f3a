"""Witness and divergence-estimator tests against independent oracles.

Oracles used here:
  * hand-evaluated 1x1 closed form (M = N = 1)
  * dense-subspace representation solving one (M+N) x (M+N) linear system
  * spectral evaluation on the orthonormalized joint span
  * naive summation loops and central finite differences
"""

import math

import numpy as np
import pytest

from drmmd import (
    GaussianKernel,
    InverseMultiquadric,
    ParticleSystem,
    build_cache,
    drmmd_estimate,
    drmmd_from_witness,
    fit_witness,
    mmd2_estimate,
)
from drmmd._reference import dense_subspace_witness_eval, spectral_drmmd
from drmmd.exceptions import NumericalAbort

E_HALF = math.exp(-0.5)


def random_pair(seed, n=20, m=20, d=2, spread=0.5):
    rng = np.random.default_rng(seed)
    source = ParticleSystem(rng.standard_normal((n, d)))
    target = ParticleSystem(rng.standard_normal((m, d)) + spread)
    return source, target


def fitted(source, target, kernel, lam):
    cache = build_cache(kernel.gram(target.positions, target.positions))
    return fit_witness(source, target, kernel, cache, lam), cache


class TestOneByOneHandOracle:
    """M = N = 1, x = 0, y = 1, Gaussian l = 1, lam = 1."""

    def setup_method(self):
        self.src = ParticleSystem(np.array([[1.0]]))
        self.tgt = ParticleSystem(np.array([[0.0]]))
        self.kernel = GaussianKernel(1.0)
        self.w, self.cache = fitted(self.src, self.tgt, self.kernel, 1.0)

    def test_coefficients(self):
        assert self.w.coeff_y == pytest.approx([2.0], rel=1e-15)
        # -2/(M lam) - (2/(N lam)) (1+1)^{-1} e^{-1/2} + (2/(M lam)) (1+1)^{-1} 1
        assert self.w.coeff_x == pytest.approx([-1.0 - E_HALF], rel=1e-14)

    def test_eval_at_zero(self):
        assert self.w.eval([0.0]) == pytest.approx(E_HALF - 1.0, rel=1e-14)

    def test_eval_at_one(self):
        expected = 2.0 - E_HALF * (1.0 + E_HALF)
        assert self.w.eval([1.0]) == pytest.approx(expected, rel=1e-14)

    def test_grad_at_half(self):
        # chain rule: 2 d_z k(z,1) + (-1 - e^{-1/2}) d_z k(z,0) at z = 0.5
        expected = math.exp(-0.125) * (1.5 + 0.5 * E_HALF)
        assert self.w.grad([0.5])[0] == pytest.approx(expected, rel=1e-13)


class TestFitWitness:
    def test_source_equals_target_vanishes(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((12, 2))
        sys_ = ParticleSystem(pts)
        kernel = GaussianKernel(0.6)
        w, _ = fitted(sys_, ParticleSystem(pts), kernel, 0.5)
        probes = rng.standard_normal((10, 2))
        assert np.max(np.abs(w.eval_many(probes))) <= 1e-12
        assert np.max(np.abs(w.grad_many(probes))) <= 1e-12

    @pytest.mark.parametrize("lam", [1e-3, 1e-1, 1.0, 10.0])
    def test_matches_dense_subspace_oracle(self, lam):
        source, target = random_pair(seed=1)
        kernel = GaussianKernel(0.5)
        w, _ = fitted(source, target, kernel, lam)
        probes = np.random.default_rng(2).standard_normal((50, 2))
        fast = w.eval_many(probes)
        slow = dense_subspace_witness_eval(source, target, kernel, lam, probes)
        assert np.max(np.abs(fast - slow)) / np.max(np.abs(slow)) <= 1e-8

    def test_rejects_bad_lam(self):
        source, target = random_pair(seed=3)
        kernel = GaussianKernel(1.0)
        cache = build_cache(kernel.gram(target.positions, target.positions))
        with pytest.raises(ValueError):
            fit_witness(source, target, kernel, cache, 0.0)

    def test_rejects_cache_target_mismatch(self):
        source, target = random_pair(seed=4)
        kernel = GaussianKernel(1.0)
        cache = build_cache(kernel.gram(source.positions[:7], source.positions[:7]))
        with pytest.raises(ValueError):
            fit_witness(source, target, kernel, cache, 1.0)


class TestEvalGrad:
    def test_zero_coefficient_model_is_zero(self):
        source, target = random_pair(seed=5, n=4, m=4)
        kernel = GaussianKernel(1.0)
        w, _ = fitted(source, target, kernel, 1.0)
        z = np.zeros((1, 2))
        wz = w.eval_many(z)
        object.__setattr__(w, "coeff_y", np.zeros_like(w.coeff_y))
        object.__setattr__(w, "coeff_x", np.zeros_like(w.coeff_x))
        assert w.eval_many(z)[0] == 0.0 and wz[0] != 0.0

    def test_eval_matches_naive_loop(self):
        source, target = random_pair(seed=6, n=9, m=7)
        kernel = GaussianKernel(0.8)
        w, _ = fitted(source, target, kernel, 0.3)
        rng = np.random.default_rng(7)
        for z in rng.standard_normal((10, 2)):
            naive = sum(
                c * kernel.eval(z, p) for c, p in zip(w.coeff_y, w.source_points)
            ) + sum(c * kernel.eval(z, p) for c, p in zip(w.coeff_x, w.target_points))
            assert w.eval(z) == pytest.approx(naive, rel=1e-13)

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        checked = 0
        for seed in range(10):
            source, target = random_pair(seed=seed + 20, n=8, m=8)
            kernel = GaussianKernel(0.7)
            w, _ = fitted(source, target, kernel, 0.5)
            for z in rng.standard_normal((10, 2)):
                g = w.grad(z)
                fd = np.zeros(2)
                for i in range(2):
                    zp, zm = z.copy(), z.copy()
                    zp[i] += 1e-5
                    zm[i] -= 1e-5
                    fd[i] = (w.eval(zp) - w.eval(zm)) / 2e-5
                scale = max(np.max(np.abs(fd)), 1e-10)
                assert np.max(np.abs(g - fd)) / scale <= 1e-5
                checked += 1
        assert checked == 100

    def test_dimension_mismatch(self):
        source, target = random_pair(seed=9)
        kernel = GaussianKernel(1.0)
        w, _ = fitted(source, target, kernel, 1.0)
        with pytest.raises(ValueError):
            w.eval([1.0, 2.0, 3.0])


class TestWitnessBounds:
    @pytest.mark.parametrize(
        "kernel", [GaussianKernel(0.5), InverseMultiquadric(1.0)]
    )
    @pytest.mark.parametrize("lam", [1e-2, 1e-1, 1.0])
    def test_sup_bounds_hold(self, kernel, lam):
        source, target = random_pair(seed=11, n=25, m=25)
        w, _ = fitted(source, target, kernel, lam)
        rng = np.random.default_rng(12)
        probes = 3.0 * rng.standard_normal((10_000, 2))
        k_sup = kernel.sup_bound()
        k1d = kernel.grad_sup_bound(2)
        vals = w.eval_many(probes)  # eval/grad also assert internally
        grads = w.grad_many(probes)
        assert np.max(np.abs(vals)) <= 2 * k_sup / lam * (1 + 1e-12)
        assert np.max(np.linalg.norm(grads, axis=1)) <= 2 * np.sqrt(k_sup * k1d) / lam * (1 + 1e-12)


class TestDrmmdEstimate:
    def test_identical_sets_zero(self):
        rng = np.random.default_rng(13)
        pts = rng.standard_normal((15, 2))
        sys_ = ParticleSystem(pts)
        kernel = GaussianKernel(0.5)
        cache = build_cache(kernel.gram(pts, pts))
        assert drmmd_estimate(sys_, ParticleSystem(pts), kernel, cache, 1.0) <= 1e-12

    @pytest.mark.parametrize("lam", [1e-2, 1.0, 1e2, 1e4])
    def test_sandwich_against_mmd2(self, lam):
        kernel = GaussianKernel(0.5)
        for seed in range(50):
            source, target = random_pair(seed=seed, n=12, m=10, d=2)
            cache = build_cache(kernel.gram(target.positions, target.positions))
            d = drmmd_estimate(source, target, kernel, cache, lam)
            m2 = mmd2_estimate(source, target, kernel)
            ratio = d / m2
            assert 1.0 - 1e-12 <= ratio <= 1.0 + 1.0 / lam + 1e-12

    def test_interpolation_limit_large_lam(self):
        source, target = random_pair(seed=14)
        kernel = GaussianKernel(0.5)
        cache = build_cache(kernel.gram(target.positions, target.positions))
        d = drmmd_estimate(source, target, kernel, cache, 1e4)
        m2 = mmd2_estimate(source, target, kernel)
        assert abs(d / m2 - 1.0) <= 1e-4

    def test_spectral_oracle_one_dim(self):
        rng = np.random.default_rng(15)
        source = ParticleSystem(rng.standard_normal((10, 1)))
        target = ParticleSystem(rng.standard_normal((10, 1)) + 0.3)
        kernel = GaussianKernel(1.0)
        cache = build_cache(kernel.gram(target.positions, target.positions))
        fast = drmmd_estimate(source, target, kernel, cache, 1.0)
        slow = spectral_drmmd(source, target, kernel, 1.0)
        assert fast == pytest.approx(slow, rel=1e-10)

    @pytest.mark.parametrize("lam", [1e-3, 1e-1, 1.0, 10.0])
    def test_path_identity(self, lam):
        source, target = random_pair(seed=16)
        kernel = GaussianKernel(0.5)
        w, cache = fitted(source, target, kernel, lam)
        quad = drmmd_estimate(source, target, kernel, cache, lam)
        via_witness = drmmd_from_witness(w)
        assert quad == pytest.approx(via_witness, rel=1e-10)

    def test_nonnegative_over_many_instances(self):
        kernel = GaussianKernel(0.4)
        for seed in range(30):
            source, target = random_pair(seed=seed + 50, n=6, m=9)
            cache = build_cache(kernel.gram(target.positions, target.positions))
            assert drmmd_estimate(source, target, kernel, cache, 0.05) >= 0.0

    def test_small_lam_divergence_on_adversarial_instance(self):
        # a source point far outside the target's span-effective region makes
        # the divergence blow up as lam decreases
        rng = np.random.default_rng(17)
        target = ParticleSystem(rng.uniform(0, 1, size=(10, 2)))
        source = ParticleSystem(np.vstack([rng.uniform(0, 1, size=(9, 2)), [[50.0, 50.0]]]))
        kernel = GaussianKernel(0.5)
        cache = build_cache(kernel.gram(target.positions, target.positions))
        vals = [drmmd_estimate(source, target, kernel, cache, lam) for lam in (1e-1, 1e-2, 1e-3, 1e-4)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestMmd2:
    def test_identical_sets(self):
        pts = np.random.default_rng(18).standard_normal((8, 3))
        assert mmd2_estimate(ParticleSystem(pts), ParticleSystem(pts), GaussianKernel(1.0)) == 0.0

    def test_single_point_analytic(self):
        src = ParticleSystem(np.array([[1.0]]))
        tgt = ParticleSystem(np.array([[0.0]]))
        expected = 2.0 - 2.0 * E_HALF
        assert mmd2_estimate(src, tgt, GaussianKernel(1.0)) == pytest.approx(expected, rel=1e-14)

    def test_negative_beyond_tolerance_aborts(self):
        src, tgt = random_pair(seed=19, n=5, m=5)
        kernel = GaussianKernel(0.5)
        cache = build_cache(kernel.gram(tgt.positions, tgt.positions))
        # force an impossible bracket by lying about the K_yy mean
        with pytest.raises(NumericalAbort):
            drmmd_estimate(src, tgt, kernel, cache, 1.0, kyy_mean=-100.0)
