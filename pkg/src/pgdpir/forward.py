"""Degradation operator A = D(h * .), its adjoint, and the noise samplers.

The forward model is y = D(h*x) + w: circular convolution with a blur
kernel followed by decimation that keeps every s-th row/column. The
Poisson-Gaussian noise w has per-pixel variance sigma0^2 + K * (Ax); the
exact sampler draws y = K * Poisson(Ax / K) + N(0, sigma0^2), the unique
affine Poisson model with that variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError
from .grid import BlurKernel, as_image, kernel_otf

# Floor for per-pixel variances, in normalized units squared. Keeps the
# noise covariance invertible when sigma0 = 0 and the signal hits 0.
EPS_VAR = 1e-12


@dataclass(frozen=True)
class NoiseParams:
    """Poisson-Gaussian noise parameters in normalized digital numbers.

    sigma0: standard deviation of the signal-independent Gaussian part.
    gain_k: Poisson gain K; the shot-noise variance contribution is
        K * (Ax).
    """

    sigma0: float
    gain_k: float

    def __post_init__(self):
        if self.sigma0 < 0 or self.gain_k < 0:
            raise ParameterError(
                f"noise parameters must be >= 0, got sigma0={self.sigma0}, gain_k={self.gain_k}"
            )

    @property
    def sigma0_sq(self) -> float:
        return self.sigma0 * self.sigma0


@dataclass(frozen=True)
class DegradationOp:
    """Blur-then-decimate operator and its adjoint.

    kernel: blur kernel applied with circular boundaries.
    decimation: integer subsampling factor s >= 1 (1 keeps the grid,
        2 is the super-resolution-by-2 problem).
    phase: (row, col) offset of the retained samples.
    """

    kernel: BlurKernel
    decimation: int = 1
    phase: tuple[int, int] = (0, 0)
    # OTF and operator-norm caches keyed by high-res image shape.
    _otf_cache: dict = field(default_factory=dict, repr=False, compare=False)
    _norm_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if int(self.decimation) < 1:
            raise ParameterError(f"decimation must be >= 1, got {self.decimation}")
        object.__setattr__(self, "decimation", int(self.decimation))
        pr, pc = int(self.phase[0]), int(self.phase[1])
        if not (0 <= pr < self.decimation and 0 <= pc < self.decimation):
            raise ParameterError(f"phase {self.phase} outside [0, {self.decimation})")
        object.__setattr__(self, "phase", (pr, pc))

    def otf(self, shape: tuple[int, int]) -> np.ndarray:
        cached = self._otf_cache.get(shape)
        if cached is None:
            cached = kernel_otf(self.kernel, shape)
            self._otf_cache[shape] = cached
        return cached

    def _check_divisible(self, shape: tuple[int, int]) -> None:
        s = self.decimation
        if shape[0] % s or shape[1] % s:
            raise ShapeError(f"image shape {shape} not divisible by decimation {s}")

    def output_shape(self, shape: tuple[int, int]) -> tuple[int, int]:
        self._check_divisible(shape)
        return (shape[0] // self.decimation, shape[1] // self.decimation)

    def input_shape(self, shape: tuple[int, int]) -> tuple[int, int]:
        return (shape[0] * self.decimation, shape[1] * self.decimation)

    def apply(self, x) -> np.ndarray:
        """A x: circular convolution, then keep every s-th sample."""
        img = as_image(x)
        self._check_divisible(img.shape)
        blurred = np.real(np.fft.ifft2(np.fft.fft2(img) * self.otf(img.shape)))
        s, (pr, pc) = self.decimation, self.phase
        return blurred[pr::s, pc::s].copy() if s > 1 else blurred

    def adjoint(self, y) -> np.ndarray:
        """A^T y: zero-fill upsample by s, then correlate with the kernel."""
        img = as_image(y)
        s, (pr, pc) = self.decimation, self.phase
        if s > 1:
            up = np.zeros((img.shape[0] * s, img.shape[1] * s), dtype=np.float64)
            up[pr::s, pc::s] = img
        else:
            up = img
        return np.real(np.fft.ifft2(np.fft.fft2(up) * np.conj(self.otf(up.shape))))

    def norm_sq(self, shape: tuple[int, int], n_iters: int = 20) -> float:
        """||A||^2 estimated by power iteration on A^T A (seeded, cached)."""
        key = (shape, n_iters)
        cached = self._norm_cache.get(key)
        if cached is None:
            rng = np.random.default_rng(0)
            b = rng.standard_normal(shape)
            b /= np.linalg.norm(b)
            lam = 1.0
            for _ in range(n_iters):
                ab = self.adjoint(self.apply(b))
                lam = float(np.linalg.norm(ab))
                if lam == 0.0:
                    break
                b = ab / lam
            cached = lam
            self._norm_cache[key] = cached
        return cached


def apply_A(x, op: DegradationOp) -> np.ndarray:
    """Functional alias for ``op.apply(x)``."""
    return op.apply(x)


def apply_A_adjoint(y, op: DegradationOp) -> np.ndarray:
    """Functional alias for ``op.adjoint(y)``."""
    return op.adjoint(y)


def variance_map(v, noise: NoiseParams) -> np.ndarray:
    """Per-pixel noise variance sigma0^2 + K * max(v, 0), floored at EPS_VAR.

    ``v`` is the noiseless measurement A x. Negative signal values
    (possible for unconstrained iterates) contribute no shot noise.
    """
    v = as_image(v, "measurement")
    var = noise.sigma0_sq + noise.gain_k * np.maximum(v, 0.0)
    return np.maximum(var, EPS_VAR)


def shot_noise_active(v, noise: NoiseParams) -> np.ndarray:
    """Boolean mask of pixels where the variance actually varies with v.

    False wherever the v <= 0 clamp or the EPS_VAR floor pins the
    variance, so gradients of the variance are zero there.
    """
    v = as_image(v, "measurement")
    if noise.gain_k == 0.0:
        return np.zeros(v.shape, dtype=bool)
    return (v > 0.0) & (noise.sigma0_sq + noise.gain_k * v > EPS_VAR)


def sample_exact_pg(x, op: DegradationOp, noise: NoiseParams, seed: int) -> np.ndarray:
    """Draw one exact Poisson-Gaussian measurement, reproducible from ``seed``.

    y = K * Poisson(v / K) + N(0, sigma0^2) with v = A x; pixels where
    v < 0 are clamped to 0 before the Poisson draw. With K = 0 the
    Poisson branch degenerates to y = v + N(0, sigma0^2).
    """
    v = op.apply(x)
    rng = np.random.default_rng(seed)
    if noise.gain_k > 0.0:
        lam = np.maximum(v, 0.0) / noise.gain_k
        y = noise.gain_k * rng.poisson(lam).astype(np.float64)
    else:
        y = v.copy()
    if noise.sigma0 > 0.0:
        y += rng.normal(0.0, noise.sigma0, size=v.shape)
    return y


def sample_gaussian_approx(x, op: DegradationOp, noise: NoiseParams, seed: int) -> np.ndarray:
    """Draw one measurement from the heteroscedastic Gaussian approximation.

    y = v + N(0, sigma0^2 + K * v) elementwise with v = A x, seeded.
    The EPS_VAR floor is a likelihood-side device and is not applied
    here, so the fully degenerate sigma0 = K = 0 case returns A x.
    """
    v = op.apply(x)
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(noise.sigma0_sq + noise.gain_k * np.maximum(v, 0.0))
    return v + rng.normal(0.0, 1.0, size=v.shape) * sigma
