import numpy as np
import pytest

from pgdpir import (
    BlurKernel,
    ParameterError,
    ShapeError,
    convolve_circular,
    correlate_circular,
    fft2,
    ifft2,
    reduce_mean,
)
from oracles import fsum_mean, random_unit_kernel, spatial_convolve_circular


class TestBlurKernel:
    def test_normalized_enforced(self):
        with pytest.raises(ParameterError):
            BlurKernel(np.ones((3, 3)))

    def test_unnormalized_allowed_with_flag(self):
        k = BlurKernel(np.ones((3, 3)), normalized=False)
        assert k.tap_sum() == pytest.approx(9.0)

    def test_default_anchor_is_center(self):
        k = BlurKernel.box(5)
        assert k.anchor == (2, 2)

    def test_anchor_out_of_range(self):
        with pytest.raises(ParameterError):
            BlurKernel(np.ones((1, 1)), anchor=(1, 0))

    def test_gaussian_is_unit_sum(self):
        k = BlurKernel.gaussian(1.3)
        assert abs(k.taps.sum() - 1.0) < 1e-12


class TestConvolveCircular:
    def test_dirac_identity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 5))
        out = convolve_circular(x, BlurKernel.dirac())
        assert np.max(np.abs(out - x)) < 1e-10

    def test_unit_sum_kernel_preserves_constant(self):
        x = np.full((6, 6), 0.37)
        out = convolve_circular(x, BlurKernel.box(3))
        assert np.max(np.abs(out - 0.37)) < 1e-12

    def test_matches_spatial_oracle_4x4(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((4, 4))
        taps = random_unit_kernel(rng)
        out = convolve_circular(x, BlurKernel(taps))
        ref = spatial_convolve_circular(x, taps, (1, 1))
        assert np.max(np.abs(out - ref)) < 1e-8

    def test_matches_spatial_oracle_many_sizes(self):
        # FFT path vs shift-and-add over sizes up to 16x16, 100 seeds total.
        rng = np.random.default_rng(2)
        for seed in range(100):
            h = int(rng.integers(3, 17))
            w = int(rng.integers(3, 17))
            ksize = int(rng.integers(1, min(h, w) + 1))
            x = rng.standard_normal((h, w))
            taps = rng.uniform(0.05, 1.0, (ksize, ksize))
            taps /= taps.sum()
            anchor = (ksize // 2, ksize // 2)
            out = convolve_circular(x, BlurKernel(taps, anchor=anchor))
            ref = spatial_convolve_circular(x, taps, anchor)
            assert np.max(np.abs(out - ref)) < 1e-10, f"seed {seed}"

    def test_linearity(self):
        rng = np.random.default_rng(3)
        k = BlurKernel(random_unit_kernel(rng))
        x = rng.standard_normal((8, 8))
        y = rng.standard_normal((8, 8))
        a, b = rng.standard_normal(2)
        lhs = convolve_circular(a * x + b * y, k)
        rhs = a * convolve_circular(x, k) + b * convolve_circular(y, k)
        assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_adjoint_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            k = BlurKernel(random_unit_kernel(rng))
            x = rng.standard_normal((8, 8))
            z = rng.standard_normal((8, 8))
            lhs = np.sum(convolve_circular(x, k) * z)
            rhs = np.sum(x * correlate_circular(z, k))
            assert abs(lhs - rhs) < 1e-8

    def test_kernel_larger_than_image(self):
        with pytest.raises(ShapeError):
            convolve_circular(np.zeros((2, 2)), BlurKernel.box(3))

    def test_anchored_asymmetric_kernel(self):
        # 1x2 kernel anchored at (0, 0): out[i, j] = x[i, j]/2 + x[i, j-1]/2.
        x = np.arange(12, dtype=float).reshape(3, 4)
        k = BlurKernel(np.array([[0.5, 0.5]]), anchor=(0, 0))
        out = convolve_circular(x, k)
        ref = 0.5 * x + 0.5 * np.roll(x, 1, axis=1)
        assert np.max(np.abs(out - ref)) < 1e-12


class TestFFT:
    def test_impulse_flat_spectrum(self):
        x = np.zeros((8, 8))
        x[0, 0] = 1.0
        spec = fft2(x)
        assert np.max(np.abs(spec - 1.0)) < 1e-12

    def test_constant_is_dc_only(self):
        spec = fft2(np.full((4, 4), 2.5))
        assert spec[0, 0] == pytest.approx(2.5 * 16)
        off_dc = spec.copy()
        off_dc[0, 0] = 0.0
        assert np.max(np.abs(off_dc)) < 1e-12

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((8, 8))
        assert np.max(np.abs(ifft2(fft2(x)) - x)) < 1e-10

    def test_parseval(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((16, 12))
        space = np.sum(x * x)
        freq = np.sum(np.abs(fft2(x)) ** 2) / x.size
        assert abs(space - freq) / abs(space) < 1e-8


class TestReduceMean:
    def test_constant(self):
        assert reduce_mean(np.full((5, 5), 0.5)) == pytest.approx(0.5)

    def test_small_exact(self):
        assert reduce_mean(np.array([[0.0, 1.0], [2.0, 3.0]])) == pytest.approx(1.5)

    def test_matches_fsum_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((16, 16))
        assert abs(reduce_mean(x) - fsum_mean(x)) < 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            reduce_mean(np.zeros((0, 3)))

    def test_nan_rejected(self):
        x = np.ones((3, 3))
        x[1, 1] = np.nan
        with pytest.raises(ParameterError):
            reduce_mean(x)
