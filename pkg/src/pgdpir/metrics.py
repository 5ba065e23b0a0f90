"""Image quality metrics: PSNR and SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, ShapeError
from .grid import as_image


@dataclass
class MetricReport:
    """Quality and cost summary of one restoration run."""

    psnr: float
    ssim: float
    wall_time: float
    trace_path: Optional[str] = None

SSIM_WINDOW = 11
SSIM_STD = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a, b):
    a = as_image(a, "a")
    b = as_image(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if not peak > 0:
        raise ParameterError(f"peak must be > 0, got {peak}")
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _ssim_window() -> np.ndarray:
    ax = np.arange(SSIM_WINDOW, dtype=np.float64) - (SSIM_WINDOW - 1) / 2.0
    g = np.exp(-(ax * ax) / (2.0 * SSIM_STD * SSIM_STD))
    g /= g.sum()
    return np.outer(g, g)


def _local_stats(a, b):
    from scipy import ndimage

    win = _ssim_window()
    filt = lambda img: ndimage.correlate(img, win, mode="reflect")
    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    return mu_a, mu_b, var_a, var_b, cov


def ssim_maps(a, b, peak: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel luminance and contrast-structure SSIM factors.

    Local statistics use an 11x11 Gaussian window (std 1.5, reflected
    boundaries) and the standard stabilizers C1 = (0.01 peak)^2 and
    C2 = (0.03 peak)^2. The SSIM index is the product of the two maps.
    """
    a, b = _check_pair(a, b)
    if min(a.shape) < SSIM_WINDOW:
        raise ShapeError(
            f"image {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_a, mu_b, var_a, var_b, cov = _local_stats(a, b)
    luminance = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    contrast_structure = (2.0 * cov + c2) / (var_a + var_b + c2)
    return luminance, contrast_structure


def ssim(a, b, peak: float = 1.0) -> float:
    """Mean structural similarity over all pixels (1.0 for identical images)."""
    luminance, contrast_structure = ssim_maps(a, b, peak)
    return float(np.mean(luminance * contrast_structure))
