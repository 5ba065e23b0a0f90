import numpy as np
import pytest

from pgdpir import (
    BlurKernel,
    DegradationOp,
    NoiseParams,
    ParameterError,
    ShapeError,
    convolve_circular,
    sample_exact_pg,
    sample_gaussian_approx,
    variance_map,
)
from pgdpir.forward import EPS_VAR, shot_noise_active
from oracles import operator_matrix, random_unit_kernel


def random_op(rng, s=2, ksize=3, phase=(0, 0)):
    return DegradationOp(BlurKernel(random_unit_kernel(rng, ksize)), s, phase)


class TestDegradationOp:
    def test_identity_when_delta_s1(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((6, 6))
        op = DegradationOp(BlurKernel.dirac(), 1)
        assert np.max(np.abs(op.apply(x) - x)) < 1e-12

    def test_pure_decimation(self):
        x = np.arange(16, dtype=float).reshape(4, 4)
        op = DegradationOp(BlurKernel.dirac(), 2)
        expected = x[0::2, 0::2]
        assert np.array_equal(op.apply(x), expected)

    def test_decimation_phase(self):
        x = np.arange(16, dtype=float).reshape(4, 4)
        op = DegradationOp(BlurKernel.dirac(), 2, phase=(1, 1))
        assert np.array_equal(op.apply(x), x[1::2, 1::2])

    def test_matches_explicit_matrix(self):
        rng = np.random.default_rng(1)
        taps = np.full((3, 3), 1.0 / 9.0)
        op = DegradationOp(BlurKernel(taps), 2)
        a_mat = operator_matrix((8, 8), taps, (1, 1), s=2)
        x = rng.standard_normal((8, 8))
        assert np.max(np.abs(op.apply(x).ravel() - a_mat @ x.ravel())) < 1e-10

    def test_indivisible_dims_rejected(self):
        op = DegradationOp(BlurKernel.dirac(), 2)
        with pytest.raises(ShapeError):
            op.apply(np.zeros((5, 4)))

    def test_invalid_decimation(self):
        with pytest.raises(ParameterError):
            DegradationOp(BlurKernel.dirac(), 0)

    def test_s1_equals_plain_convolution(self):
        rng = np.random.default_rng(2)
        k = BlurKernel(random_unit_kernel(rng))
        op = DegradationOp(k, 1)
        x = rng.standard_normal((8, 8))
        assert np.array_equal(op.apply(x), convolve_circular(x, k))


class TestAdjoint:
    def test_identity_when_delta_s1(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal((6, 6))
        op = DegradationOp(BlurKernel.dirac(), 1)
        assert np.max(np.abs(op.adjoint(y) - y)) < 1e-12

    def test_zero_fill_upsample(self):
        op = DegradationOp(BlurKernel.dirac(), 2)
        out = op.adjoint(np.ones((2, 2)))
        expected = np.zeros((4, 4))
        expected[0::2, 0::2] = 1.0
        assert np.array_equal(out, expected)

    def test_dot_product_identity(self):
        rng = np.random.default_rng(4)
        for seed in range(20):
            s = 1 + seed % 2
            phase = (seed % s, (seed // 2) % s)
            op = random_op(rng, s=s, phase=phase)
            x = rng.standard_normal((8, 8))
            y = rng.standard_normal((8 // s, 8 // s))
            lhs = np.sum(op.apply(x) * y)
            rhs = np.sum(x * op.adjoint(y))
            assert abs(lhs - rhs) < 1e-10

    def test_norm_sq_matches_dense(self):
        rng = np.random.default_rng(5)
        taps = random_unit_kernel(rng)
        op = DegradationOp(BlurKernel(taps), 2)
        a_mat = operator_matrix((8, 8), taps, (1, 1), s=2)
        exact = np.linalg.svd(a_mat, compute_uv=False)[0] ** 2
        assert op.norm_sq((8, 8)) == pytest.approx(exact, rel=1e-3)


class TestVarianceMap:
    def test_pure_gaussian(self):
        v = np.zeros((4, 4))
        out = variance_map(v, NoiseParams(0.01, 0.0))
        assert np.max(np.abs(out - 1e-4)) < 1e-18

    def test_formula(self):
        v = np.full((2, 2), 0.5)
        out = variance_map(v, NoiseParams(0.01, 0.001))
        assert out[0, 0] == pytest.approx(1e-4 + 5e-4)

    def test_negative_clamped(self):
        v = np.full((2, 2), -0.2)
        noise = NoiseParams(0.01, 0.001)
        out = variance_map(v, noise)
        assert np.all(out == max(noise.sigma0_sq, EPS_VAR))

    def test_floor_when_all_zero(self):
        out = variance_map(np.zeros((2, 2)), NoiseParams(0.0, 0.5))
        assert np.all(out == EPS_VAR)

    def test_active_mask(self):
        noise = NoiseParams(0.01, 0.001)
        v = np.array([[-1.0, 0.5]])
        assert shot_noise_active(v, noise).tolist() == [[False, True]]

    def test_negative_params_rejected(self):
        with pytest.raises(ParameterError):
            NoiseParams(-0.1, 0.0)


class TestSamplers:
    def test_degenerate_returns_ax(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 1, (8, 8))
        op = random_op(rng, s=1)
        noise = NoiseParams(0.0, 0.0)
        v = op.apply(x)
        assert np.array_equal(sample_exact_pg(x, op, noise, seed=0), v)
        assert np.array_equal(sample_gaussian_approx(x, op, noise, seed=0), v)

    def test_seed_determinism(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 1, (8, 8))
        op = random_op(rng, s=2)
        noise = NoiseParams(0.01, 0.002)
        a = sample_exact_pg(x, op, noise, seed=123)
        b = sample_exact_pg(x, op, noise, seed=123)
        assert np.array_equal(a, b)
        c = sample_gaussian_approx(x, op, noise, seed=9)
        d = sample_gaussian_approx(x, op, noise, seed=9)
        assert np.array_equal(c, d)

    def test_different_seeds_differ(self):
        x = np.full((4, 4), 0.5)
        op = DegradationOp(BlurKernel.dirac(), 1)
        noise = NoiseParams(0.02, 0.0)
        assert not np.array_equal(
            sample_exact_pg(x, op, noise, seed=0), sample_exact_pg(x, op, noise, seed=1)
        )

    def test_gaussian_only_moments(self):
        # K = 0: empirical variance within 3% of sigma0^2 over 1e5 draws.
        x = np.full((2, 2), 0.5)
        op = DegradationOp(BlurKernel.dirac(), 1)
        noise = NoiseParams(0.02, 0.0)
        draws = np.array([sample_exact_pg(x, op, noise, seed=s) for s in range(2000)])
        # 2000 seeds x 4 pixels of iid noise = 8000 samples per moment check;
        # pool pixels for a 3% bound.
        var = draws.var()
        assert abs(var - 4e-4) / 4e-4 < 0.03

    def test_poisson_gaussian_moments_match_approximation(self):
        # Constant v = 0.5, K = 0.001 (v/K = 500 photons): the exact
        # sampler's variance must match sigma0^2 + K v within 3%.
        x = np.full((2, 2), 0.5)
        op = DegradationOp(BlurKernel.dirac(), 1)
        noise = NoiseParams(0.01, 0.001)
        rng_draws = [sample_exact_pg(x, op, noise, seed=s) for s in range(4000)]
        draws = np.array(rng_draws)
        expected_var = 1e-4 + 0.001 * 0.5
        assert abs(draws.mean() - 0.5) < 0.01 * 0.5
        assert abs(draws.var() - expected_var) / expected_var < 0.03

    def test_gaussian_approx_matches_exact_when_k0(self):
        x = np.full((2, 2), 0.3)
        op = DegradationOp(BlurKernel.dirac(), 1)
        noise = NoiseParams(0.05, 0.0)
        exact = np.array([sample_exact_pg(x, op, noise, seed=s) for s in range(3000)])
        approx = np.array([sample_gaussian_approx(x, op, noise, seed=s) for s in range(3000)])
        assert abs(exact.var() - approx.var()) / exact.var() < 0.05
        assert abs(exact.mean() - approx.mean()) < 0.005

    def test_negative_signal_clamped_before_poisson(self):
        x = np.full((4, 4), -0.5)
        op = DegradationOp(BlurKernel.dirac(), 1)
        noise = NoiseParams(0.0, 0.01)
        y = sample_exact_pg(x, op, noise, seed=0)
        assert np.array_equal(y, np.zeros((4, 4)))
