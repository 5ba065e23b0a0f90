"""Procedural target images for simulation and benchmarks.

No imagery ships with the package; these seeded generators stand in
for real scenes. All targets are nonnegative, stay within [0, 1], and
are deterministic given their parameters.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ParameterError


def checkerboard(size: int, cell: int = 8, low: float = 0.2, high: float = 0.8) -> np.ndarray:
    """Alternating squares of the given cell size."""
    idx = np.arange(size)
    pattern = ((idx[:, None] // cell) + (idx[None, :] // cell)) % 2
    return np.where(pattern == 0, low, high).astype(np.float64)


def ramp(size: int, low: float = 0.1, high: float = 0.9) -> np.ndarray:
    """Diagonal linear ramp from low to high."""
    idx = np.arange(size, dtype=np.float64)
    g = (idx[:, None] + idx[None, :]) / (2.0 * max(size - 1, 1))
    return low + (high - low) * g


def filtered_noise(
    size: int, seed: int = 0, smooth_px: float = 3.0, low: float = 0.1, high: float = 0.9
) -> np.ndarray:
    """Gaussian-filtered white noise rescaled into [low, high]."""
    rng = np.random.default_rng(seed)
    raw = ndimage.gaussian_filter(rng.standard_normal((size, size)), smooth_px, mode="wrap")
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.full((size, size), 0.5 * (low + high))
    return low + (high - low) * (raw - lo) / (hi - lo)


def urban(size: int, seed: int = 0, n_rects: int = 14, background: float = 0.15) -> np.ndarray:
    """Synthetic built-up scene: overlapping rectangles and bright lines."""
    rng = np.random.default_rng(seed)
    img = np.full((size, size), background, dtype=np.float64)
    for _ in range(n_rects):
        h = rng.integers(size // 8, size // 2)
        w = rng.integers(size // 8, size // 2)
        r = rng.integers(0, size - h + 1)
        c = rng.integers(0, size - w + 1)
        img[r : r + h, c : c + w] = rng.uniform(0.2, 0.95)
    for _ in range(max(2, n_rects // 4)):
        pos = rng.integers(0, size)
        if rng.random() < 0.5:
            img[pos, :] = 0.9
        else:
            img[:, pos] = 0.9
    return img


_GENERATORS = {
    "checkerboard": checkerboard,
    "ramp": ramp,
    "filtered_noise": filtered_noise,
    "urban": urban,
}


def make_target(kind: str, size: int, **params) -> np.ndarray:
    """Build a target image by generator name."""
    if kind not in _GENERATORS:
        raise ParameterError(f"unknown target kind {kind!r}; expected one of {sorted(_GENERATORS)}")
    if size < 1:
        raise ParameterError(f"target size must be >= 1, got {size}")
    return _GENERATORS[kind](size, **params)
