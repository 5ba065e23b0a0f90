"""Pluggable Gaussian denoisers: the prior step of the splitting loop.

Built-ins (identity, Gaussian smoothing, total variation, median) keep
the solvers self-contained; the ``external`` kind drives an arbitrary
denoiser process over the binary stdio protocol so neural priors can
attach without this package depending on them.
"""

from __future__ import annotations

import logging
import select
import shlex
import subprocess
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DenoiserError, ParameterError, ProtocolError
from .grid import BlurKernel, as_image, convolve_circular
from .protocol import (
    HEADER_SIZE,
    pack_frame,
    pack_shutdown,
    parse_header,
    payload_to_image,
)

logger = logging.getLogger(__name__)

BUILTIN_KINDS = ("identity", "gaussian_smooth", "tv", "median")
# Built-in denoisers are calibrated for normalized noise levels; larger
# requests are clamped to this value with a logged warning.
SIGMA_D_MAX = 0.5


@dataclass(frozen=True)
class DenoiserSpec:
    """Selection of a denoiser: a built-in kind or an external command.

    params carries kind-specific settings (validated at construction);
    external_cmd is the command line of the server process for the
    ``external`` kind.
    """

    kind: str
    params: dict = field(default_factory=dict)
    external_cmd: tuple[str, ...] | None = None

    _DEFAULTS = {
        "identity": {},
        "gaussian_smooth": {"c": 1.0, "image_scale": 50.0},
        "tv": {"weight_scale": 8.0, "iters": 50, "tol": 1e-5},
        "median": {},
        "external": {"timeout": 60.0},
    }

    def __post_init__(self):
        if self.kind not in self._DEFAULTS:
            raise ParameterError(
                f"unknown denoiser kind {self.kind!r}; expected one of "
                f"{sorted(self._DEFAULTS)}"
            )
        defaults = dict(self._DEFAULTS[self.kind])
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ParameterError(
                f"unknown params {sorted(unknown)} for denoiser {self.kind!r}"
            )
        defaults.update(self.params)
        object.__setattr__(self, "params", defaults)
        if self.kind == "external":
            cmd = self.external_cmd
            if isinstance(cmd, str):
                cmd = tuple(shlex.split(cmd))
            if not cmd:
                raise ParameterError("external denoiser requires a nonempty command")
            object.__setattr__(self, "external_cmd", tuple(cmd))
        elif self.external_cmd is not None:
            raise ParameterError(f"external_cmd is only valid for kind 'external'")

    @staticmethod
    def identity() -> "DenoiserSpec":
        return DenoiserSpec("identity")

    @staticmethod
    def gaussian(c: float = 1.0, image_scale: float = 50.0) -> "DenoiserSpec":
        return DenoiserSpec("gaussian_smooth", {"c": c, "image_scale": image_scale})

    @staticmethod
    def tv(weight_scale: float = 8.0, iters: int = 50, tol: float = 1e-5) -> "DenoiserSpec":
        return DenoiserSpec("tv", {"weight_scale": weight_scale, "iters": iters, "tol": tol})

    @staticmethod
    def median() -> "DenoiserSpec":
        return DenoiserSpec("median")

    @staticmethod
    def external(cmd, timeout: float = 60.0) -> "DenoiserSpec":
        return DenoiserSpec("external", {"timeout": timeout}, external_cmd=cmd)

    @staticmethod
    def parse(text: str) -> "DenoiserSpec":
        """Parse a CLI-style name: a built-in kind or ``external:CMD``."""
        if text.startswith("external:"):
            return DenoiserSpec.external(text[len("external:"):])
        if text == "gaussian":
            text = "gaussian_smooth"
        return DenoiserSpec(text)


def _clamped_sigma(sigma_d: float) -> float:
    if not sigma_d > 0:
        raise ParameterError(f"sigma_d must be > 0, got {sigma_d}")
    if sigma_d > SIGMA_D_MAX:
        logger.warning(
            "sigma_d=%g beyond the built-in denoiser range, clamping to %g",
            sigma_d,
            SIGMA_D_MAX,
        )
        return SIGMA_D_MAX
    return float(sigma_d)


def gaussian_smooth(x, sigma_d: float, c: float = 1.0, image_scale: float = 50.0) -> np.ndarray:
    """Low-pass denoiser: circular Gaussian blur with std c * sigma_d * image_scale px."""
    img = as_image(x)
    std_px = c * _clamped_sigma(sigma_d) * image_scale
    radius = max(1, int(np.ceil(3.0 * std_px)))
    radius = min(radius, (min(img.shape) - 1) // 2)  # kernel must fit in the image
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * std_px * std_px))
    kernel = BlurKernel(taps / taps.sum())
    return convolve_circular(img, kernel)


def tv_denoise(
    x,
    weight: float,
    iters: int = 50,
    tol: float = 1e-5,
    return_objectives: bool = False,
):
    """Rudin-Osher-Fatemi denoiser via the dual projection iteration.

    Minimizes 0.5 ||z - x||^2 + weight * TV(z) (isotropic TV, forward
    differences with Neumann boundary). The dual variable is updated
    with step 0.125, inside the method's convergent range, and the
    loop exits early once the dual update max-norm falls below ``tol``.
    With ``return_objectives`` the primal objective per iteration is
    returned alongside the solution.
    """
    f = as_image(x)
    if weight < 0:
        raise ParameterError(f"tv weight must be >= 0, got {weight}")
    objectives: list[float] = []
    if weight == 0.0 or iters <= 0:
        return (f.copy(), objectives) if return_objectives else f.copy()

    def grad(z):
        g = np.zeros((2,) + z.shape)
        g[0, :-1, :] = z[1:, :] - z[:-1, :]
        g[1, :, :-1] = z[:, 1:] - z[:, :-1]
        return g

    def div(p):
        d = np.zeros(p.shape[1:])
        d[:-1, :] += p[0, :-1, :]
        d[1:, :] -= p[0, :-1, :]
        d[:, :-1] += p[1, :, :-1]
        d[:, 1:] -= p[1, :, :-1]
        return d

    def objective(z):
        g = grad(z)
        tv = float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))
        return 0.5 * float(np.sum((z - f) ** 2)) + weight * tv

    tau = 0.125
    p = np.zeros((2,) + f.shape)
    for _ in range(iters):
        gdp = grad(div(p) - f / weight)
        mag = np.sqrt(gdp[0] ** 2 + gdp[1] ** 2)
        p_new = (p + tau * gdp) / (1.0 + tau * mag)
        delta = float(np.max(np.abs(p_new - p)))
        p = p_new
        if return_objectives:
            objectives.append(objective(f - weight * div(p)))
        if delta < tol:
            break
    out = f - weight * div(p)
    return (out, objectives) if return_objectives else out


def median_denoise(x) -> np.ndarray:
    """3x3 median filter with circular boundaries (strength-independent)."""
    return ndimage.median_filter(as_image(x), size=3, mode="wrap")


def denoise(x, sigma_d: float, spec: DenoiserSpec) -> np.ndarray:
    """Apply the denoiser selected by ``spec`` at noise level ``sigma_d``.

    For the ``external`` kind this spawns the server, runs one request
    and shuts it down; long-running callers should hold a handle open
    via :func:`open_denoiser` instead.
    """
    img = as_image(x)
    if spec.kind == "identity":
        _clamped_sigma(sigma_d)
        return img.copy()
    if spec.kind == "gaussian_smooth":
        return gaussian_smooth(img, sigma_d, spec.params["c"], spec.params["image_scale"])
    if spec.kind == "tv":
        sd = _clamped_sigma(sigma_d)
        return tv_denoise(
            img,
            spec.params["weight_scale"] * sd * sd,
            iters=spec.params["iters"],
            tol=spec.params["tol"],
        )
    if spec.kind == "median":
        _clamped_sigma(sigma_d)
        return median_denoise(img)
    with open_denoiser(spec) as handle:
        return handle(img, sigma_d)


class ExternalDenoiser:
    """Single-owner handle on one external denoiser process.

    Requests are strictly serial: one frame out, one frame back. The
    handle is not shareable across threads; concurrent solver runs
    need one process each.
    """

    def __init__(self, cmd, timeout: float = 60.0):
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        self.cmd = list(cmd)
        self.timeout = timeout
        self._stderr = tempfile.TemporaryFile()
        try:
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=self._stderr,
            )
        except OSError as exc:
            self._stderr.close()
            raise DenoiserError(f"failed to launch external denoiser {self.cmd}: {exc}")

    def _captured_stderr(self) -> str:
        try:
            self._stderr.seek(0)
            return self._stderr.read().decode(errors="replace").strip()
        except (OSError, ValueError):
            return ""

    def _fail(self, kind, message: str):
        detail = self._captured_stderr()
        rc = self._proc.poll()
        if rc is not None:
            message += f" (server exited with code {rc})"
        if detail:
            message += f"; server stderr: {detail}"
        raise kind(message)

    def _read_exact(self, n: int) -> bytes:
        out = bytearray()
        stream = self._proc.stdout
        while len(out) < n:
            ready, _, _ = select.select([stream], [], [], self.timeout)
            if not ready:
                self._fail(DenoiserError, f"external denoiser timed out after {self.timeout}s")
            chunk = stream.read1(n - len(out))
            if not chunk:
                self._fail(
                    ProtocolError,
                    f"external denoiser closed its stream after {len(out)}/{n} bytes",
                )
            out.extend(chunk)
        return bytes(out)

    def denoise(self, x, sigma_d: float) -> np.ndarray:
        img = as_image(x)
        if self._proc.poll() is not None:
            self._fail(DenoiserError, "external denoiser process is not running")
        try:
            self._proc.stdin.write(pack_frame(img, sigma_d))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._fail(DenoiserError, "external denoiser rejected the request frame")
        height, width, channels, _ = parse_header(self._read_exact(HEADER_SIZE))
        if channels != 1:
            raise ProtocolError(f"server replied with {channels} channels, expected 1")
        if (height, width) != img.shape:
            raise ProtocolError(
                f"server replied with shape {(height, width)}, expected {img.shape}"
            )
        return payload_to_image(self._read_exact(height * width * 4), height, width)

    __call__ = denoise

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(pack_shutdown())
                self._proc.stdin.flush()
                self._proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        self._stderr.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@contextmanager
def open_denoiser(spec: DenoiserSpec):
    """Yield a callable ``(image, sigma_d) -> image`` for the spec.

    Built-ins yield a pure closure; the external kind launches one
    server process for the lifetime of the context.
    """
    if spec.kind == "external":
        handle = ExternalDenoiser(spec.external_cmd, timeout=spec.params["timeout"])
        try:
            yield handle
        finally:
            handle.close()
    else:
        yield lambda img, sigma_d: denoise(img, sigma_d, spec)
