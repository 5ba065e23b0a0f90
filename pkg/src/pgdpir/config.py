"""Run configuration: strict JSON schema and builders for solver objects.

Configs are plain JSON with a fixed vocabulary; unknown keys are
rejected at every level so typos fail loudly instead of silently
falling back to defaults. CLI flags override file values after
parsing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .denoisers import DenoiserSpec
from .errors import ConfigError, ParameterError, ShapeError
from .forward import DegradationOp, NoiseParams
from .grid import BlurKernel
from .imageio import read_imgf, read_png16
from .solvers import SolverConfig, default_config
from .targets import make_target

METHODS = ("pg-dpir", "dpir", "pgd")
PROBLEMS = ("ir", "sisr")

_TOP_KEYS = {
    "problem",
    "operator",
    "noise",
    "solver",
    "denoiser",
    "method",
    "seed",
    "target",
    "paths",
    "bench",
}
_OPERATOR_KEYS = {"kind", "std", "radius", "size", "path", "s", "phase"}
_NOISE_KEYS = {"sigma0", "gain_k"}
_SOLVER_KEYS = {
    "lambda",
    "n_iters",
    "sigma1",
    "eta",
    "inner_steps",
    "phase_split",
    "init_mode",
    "backtracking",
    "pgd_iters",
    "pgd_sigma",
    "pgd_eta",
}
_TARGET_KEYS = {"kind", "size", "path", "cell", "low", "high", "seed", "smooth_px", "n_rects", "background"}
_PATH_KEYS = {"out", "degraded", "manifest", "reference"}
_BENCH_KEYS = {"instances", "size", "grad_tol", "max_inner", "base_seed"}


def _check_keys(d: dict, allowed: set, context: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{context} must be an object, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {context}; allowed: {sorted(allowed)}")


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    try:
        with open(p) as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {p} must contain a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")
    return raw


def build_kernel(spec: dict) -> BlurKernel:
    _check_keys(spec, _OPERATOR_KEYS, "operator")
    kind = spec.get("kind")
    try:
        if kind == "dirac":
            return BlurKernel.dirac()
        if kind == "gaussian":
            if "std" not in spec:
                raise ConfigError("operator kind 'gaussian' requires 'std'")
            return BlurKernel.gaussian(float(spec["std"]), spec.get("radius"))
        if kind == "box":
            if "size" not in spec:
                raise ConfigError("operator kind 'box' requires 'size'")
            return BlurKernel.box(int(spec["size"]))
        if kind == "disk":
            if "radius" not in spec:
                raise ConfigError("operator kind 'disk' requires 'radius'")
            return BlurKernel.disk(float(spec["radius"]))
        if kind == "file":
            if "path" not in spec:
                raise ConfigError("operator kind 'file' requires 'path'")
            taps = _load_kernel_taps(spec["path"])
            normalized = abs(float(taps.sum()) - 1.0) <= 1e-6
            return BlurKernel(taps, normalized=normalized)
    except (ParameterError, ShapeError) as exc:
        raise ConfigError(f"invalid operator: {exc}")
    raise ConfigError(
        f"unknown operator kind {kind!r}; expected gaussian, box, disk, dirac or file"
    )


def _load_kernel_taps(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"kernel file {p} not found")
    if p.suffix == ".npy":
        return np.asarray(np.load(p), dtype=np.float64)
    if p.suffix == ".imgf":
        return read_imgf(p)
    raise ConfigError(f"kernel file {p}: expected a .npy or .imgf file")


def build_operator(spec: dict, problem: str) -> DegradationOp:
    kernel = build_kernel(spec)
    s = spec.get("s", 1 if problem == "ir" else 2)
    phase = spec.get("phase", (0, 0))
    try:
        return DegradationOp(kernel, int(s), (int(phase[0]), int(phase[1])))
    except (ParameterError, ShapeError, TypeError, IndexError) as exc:
        raise ConfigError(f"invalid operator: {exc}")


def build_noise(spec: dict) -> NoiseParams:
    _check_keys(spec, _NOISE_KEYS, "noise")
    try:
        return NoiseParams(float(spec.get("sigma0", 0.0)), float(spec.get("gain_k", 0.0)))
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"invalid noise parameters: {exc}")


def build_solver_config(spec: dict | None, problem: str) -> SolverConfig:
    base = default_config(problem)
    if spec is None:
        return base
    _check_keys(spec, _SOLVER_KEYS, "solver")
    fields = {
        "n_iters": base.n_iters,
        "lam": base.lam,
        "sigma1": base.sigma1,
        "eta": base.eta,
        "inner_steps": base.inner_steps,
        "phase_split": base.phase_split,
        "init_mode": base.init_mode,
        "backtracking": base.backtracking,
        "pgd_iters": base.pgd_iters,
        "pgd_sigma": base.pgd_sigma,
        "pgd_eta": base.pgd_eta,
    }
    renames = {"lambda": "lam"}
    for key, value in spec.items():
        fields[renames.get(key, key)] = value
    try:
        return SolverConfig(**fields)
    except (ParameterError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver settings: {exc}")


def build_denoiser(spec) -> DenoiserSpec:
    try:
        if isinstance(spec, str):
            return DenoiserSpec.parse(spec)
        if isinstance(spec, dict):
            _check_keys(spec, {"kind", "params", "cmd", "timeout"}, "denoiser")
            kind = spec.get("kind")
            if kind == "external":
                if "cmd" not in spec:
                    raise ConfigError("external denoiser requires 'cmd'")
                return DenoiserSpec.external(spec["cmd"], float(spec.get("timeout", 60.0)))
            return DenoiserSpec(kind, dict(spec.get("params", {})))
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"invalid denoiser: {exc}")
    raise ConfigError(f"denoiser must be a name or an object, got {type(spec).__name__}")


def build_target(spec: dict) -> np.ndarray:
    _check_keys(spec, _TARGET_KEYS, "target")
    kind = spec.get("kind")
    if kind is None:
        raise ConfigError("target requires 'kind'")
    if kind == "file":
        if "path" not in spec:
            raise ConfigError("target kind 'file' requires 'path'")
        p = Path(spec["path"])
        if not p.exists():
            raise ConfigError(f"target file {p} not found")
        if p.suffix == ".imgf":
            return read_imgf(p)
        if p.suffix == ".png":
            return read_png16(p)
        raise ConfigError(f"target file {p}: expected a .imgf or .png file")
    params = {k: v for k, v in spec.items() if k not in ("kind", "size")}
    if "size" not in spec:
        raise ConfigError(f"target kind {kind!r} requires 'size'")
    try:
        return make_target(kind, int(spec["size"]), **params)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"invalid target: {exc}")


@dataclass
class RunConfig:
    """Fully resolved configuration of one CLI run.

    ``operator`` and ``noise`` may be None when the config was parsed
    with ``require_forward=False`` (restore runs read them from the
    simulation manifest instead).
    """

    problem: str
    method: str
    seed: int
    operator: DegradationOp | None
    noise: NoiseParams | None
    solver: SolverConfig
    denoiser: DenoiserSpec
    raw: dict

    @staticmethod
    def from_dict(raw: dict, require_forward: bool = True) -> "RunConfig":
        _check_keys(raw, _TOP_KEYS, "config")
        problem = raw.get("problem", "ir")
        if problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {problem!r}")
        method = raw.get("method", "pg-dpir")
        if method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
        if require_forward:
            if "operator" not in raw:
                raise ConfigError("config requires an 'operator' section")
            if "noise" not in raw:
                raise ConfigError("config requires a 'noise' section")
        operator = build_operator(raw["operator"], problem) if "operator" in raw else None
        noise = build_noise(raw["noise"]) if "noise" in raw else None
        solver = build_solver_config(raw.get("solver"), problem)
        denoiser = build_denoiser(raw.get("denoiser", "tv"))
        paths = raw.get("paths", {})
        _check_keys(paths, _PATH_KEYS, "paths")
        if "bench" in raw:
            _check_keys(raw["bench"], _BENCH_KEYS, "bench")
        return RunConfig(
            problem=problem,
            method=method,
            seed=seed,
            operator=operator,
            noise=noise,
            solver=solver,
            denoiser=denoiser,
            raw=raw,
        )

    @property
    def paths(self) -> dict:
        return self.raw.get("paths", {})
