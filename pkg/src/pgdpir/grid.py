"""Dense 2-D image container and FFT-based convolution primitives.

Images are plain 2-D float64 ndarrays in normalized digital numbers
(1.0 = sensor full scale, e.g. 4095 for a 12-bit detector). All public
operations validate their inputs, work in float64 and return finite
arrays. Convolution uses periodic (circular) boundaries throughout, so
the frequency-domain solvers elsewhere in the package are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError

KERNEL_SUM_TOL = 1e-6


def as_image(x, name: str = "image") -> np.ndarray:
    """Validate and return ``x`` as a 2-D float64 array.

    Accepts anything array-like. Raises ShapeError for wrong
    dimensionality or empty arrays, and ParameterError for
    non-finite values.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class BlurKernel:
    """Small convolution kernel with an explicit center tap.

    taps: 2-D float64 weights.
    anchor: (row, col) index of the center tap; defaults to the
        geometric center (size // 2).
    normalized: when True (the default), the tap sum must be within
        1e-6 of 1.0 so the kernel preserves the mean level.
    """

    taps: np.ndarray
    anchor: tuple[int, int] = None  # type: ignore[assignment]
    normalized: bool = True

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.size == 0:
            raise ShapeError(f"kernel taps must be a nonempty 2-D array, got shape {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise ParameterError("kernel taps contain non-finite values")
        object.__setattr__(self, "taps", taps)
        anchor = self.anchor
        if anchor is None:
            anchor = (taps.shape[0] // 2, taps.shape[1] // 2)
        r, c = int(anchor[0]), int(anchor[1])
        if not (0 <= r < taps.shape[0] and 0 <= c < taps.shape[1]):
            raise ParameterError(f"anchor {anchor} outside kernel of shape {taps.shape}")
        object.__setattr__(self, "anchor", (r, c))
        if self.normalized and abs(taps.sum() - 1.0) > KERNEL_SUM_TOL:
            raise ParameterError(
                f"normalized kernel must sum to 1 within {KERNEL_SUM_TOL}, got {taps.sum()!r}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.taps.shape

    def tap_sum(self) -> float:
        return float(self.taps.sum())

    @staticmethod
    def dirac() -> "BlurKernel":
        """Identity kernel: a single unit tap."""
        return BlurKernel(np.ones((1, 1)))

    @staticmethod
    def box(size: int) -> "BlurKernel":
        """Uniform size x size averaging kernel."""
        if size < 1:
            raise ParameterError(f"box size must be >= 1, got {size}")
        return BlurKernel(np.full((size, size), 1.0 / (size * size)))

    @staticmethod
    def gaussian(std: float, radius: int | None = None) -> "BlurKernel":
        """Isotropic Gaussian kernel truncated at ``radius`` (default 3*std)."""
        if std <= 0:
            raise ParameterError(f"gaussian std must be > 0, got {std}")
        if radius is None:
            radius = max(1, int(np.ceil(3.0 * std)))
        ax = np.arange(-radius, radius + 1, dtype=np.float64)
        g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * std * std))
        return BlurKernel(g / g.sum())

    @staticmethod
    def disk(radius: float) -> "BlurKernel":
        """Flat circular (pillbox) kernel of the given radius in pixels."""
        if radius <= 0:
            raise ParameterError(f"disk radius must be > 0, got {radius}")
        r = int(np.ceil(radius))
        ax = np.arange(-r, r + 1, dtype=np.float64)
        mask = (ax[:, None] ** 2 + ax[None, :] ** 2) <= radius * radius
        taps = mask.astype(np.float64)
        return BlurKernel(taps / taps.sum())


def kernel_otf(kernel: BlurKernel, shape: tuple[int, int]) -> np.ndarray:
    """Optical transfer function: FFT of the kernel embedded at the origin.

    The anchor tap lands on index (0, 0) so the convolution introduces
    no shift. Raises ShapeError when the kernel does not fit in ``shape``.
    """
    kh, kw = kernel.taps.shape
    h, w = shape
    if kh > h or kw > w:
        raise ShapeError(f"kernel {kernel.taps.shape} larger than image {shape}")
    pad = np.zeros(shape, dtype=np.float64)
    pad[:kh, :kw] = kernel.taps
    pad = np.roll(pad, (-kernel.anchor[0], -kernel.anchor[1]), axis=(0, 1))
    return np.fft.fft2(pad)


def fft2(x) -> np.ndarray:
    """2-D discrete Fourier transform (complex128)."""
    return np.fft.fft2(as_image(x))


def ifft2(spectrum) -> np.ndarray:
    """Inverse 2-D DFT, returning the real part as float64."""
    spec = np.asarray(spectrum)
    if spec.ndim != 2 or spec.size == 0:
        raise ShapeError(f"spectrum must be a nonempty 2-D array, got shape {spec.shape}")
    return np.real(np.fft.ifft2(spec))


def convolve_circular(x, kernel: BlurKernel) -> np.ndarray:
    """Circular (periodic-boundary) convolution of an image with a kernel.

    Computed in the frequency domain; linear in ``x`` and exact for the
    periodic extension, so a unit-sum kernel maps a constant image to
    the same constant.
    """
    img = as_image(x)
    otf = kernel_otf(kernel, img.shape)
    return np.real(np.fft.ifft2(np.fft.fft2(img) * otf))


def correlate_circular(x, kernel: BlurKernel) -> np.ndarray:
    """Circular correlation: the adjoint of :func:`convolve_circular`."""
    img = as_image(x)
    otf = kernel_otf(kernel, img.shape)
    return np.real(np.fft.ifft2(np.fft.fft2(img) * np.conj(otf)))


def reduce_mean(x) -> float:
    """Arithmetic mean over all pixels."""
    return float(np.mean(as_image(x)))
