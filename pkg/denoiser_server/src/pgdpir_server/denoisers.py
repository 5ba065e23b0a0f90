"""Denoisers the server can host: echo, a classical blur, or a plugin.

The blur mode reproduces, by an independent separable implementation,
the Gaussian smoothing the client package applies in process: kernel
standard deviation sigma_d * 50 pixels (sigma_d clamped at 0.5),
truncated at radius max(1, ceil(3 * std)) and clamped so the kernel
fits the image, normalized to unit sum, circular boundaries.

Plugin mode hosts any callable ``denoise(image, sigma) -> image`` taking
and returning a 2-D float array; no model weights ship with this
package.
"""

from __future__ import annotations

import importlib
import importlib.util
import inspect
import math
from pathlib import Path

import numpy as np
from scipy import ndimage


def echo(image: np.ndarray, sigma_d: float) -> np.ndarray:
    return image


def gaussian_blur(image: np.ndarray, sigma_d: float) -> np.ndarray:
    sd = min(max(sigma_d, 0.0), 0.5)
    std = sd * 50.0
    radius = max(1, int(math.ceil(3.0 * std)))
    radius = min(radius, (min(image.shape) - 1) // 2)
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(ax * ax) / (2.0 * std * std)) if std > 0 else (ax == 0).astype(float)
    taps /= taps.sum()
    out = ndimage.convolve1d(image, taps, axis=0, mode="wrap")
    return ndimage.convolve1d(out, taps, axis=1, mode="wrap")


class PluginError(Exception):
    """The plugin could not be loaded or is not a valid denoiser."""


def load_plugin(spec: str, device: str | None = None):
    """Resolve a plugin to a ``denoise(image, sigma) -> image`` callable.

    Accepts ``path/to/file.py`` (must define ``denoise``),
    ``package.module`` (ditto) or ``package.module:attribute``. If the
    callable takes a ``device`` keyword the configured device hint is
    bound to it.
    """
    attr = "denoise"
    target = spec
    if ":" in spec and not spec.endswith(".py"):
        target, attr = spec.rsplit(":", 1)
    if target.endswith(".py"):
        path = Path(target)
        if not path.exists():
            raise PluginError(f"plugin file {path} not found")
        module_spec = importlib.util.spec_from_file_location("pgdpir_server_plugin", path)
        module = importlib.util.module_from_spec(module_spec)
        module_spec.loader.exec_module(module)
    else:
        try:
            module = importlib.import_module(target)
        except ImportError as exc:
            raise PluginError(f"cannot import plugin module {target!r}: {exc}")
    fn = getattr(module, attr, None)
    if not callable(fn):
        raise PluginError(f"plugin {spec!r} does not expose a callable {attr!r}")
    if device is not None and "device" in inspect.signature(fn).parameters:
        bound = fn

        def fn(image, sigma, _bound=bound, _device=device):
            return _bound(image, sigma, device=_device)

    return fn
