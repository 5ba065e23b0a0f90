"""Plug-and-play restoration for high-count Poisson-Gaussian imaging.

The package provides the forward-model simulator (blur, decimation,
exact and Gaussian-approximated Poisson-Gaussian noise), the
heteroscedastic data-fidelity prox with its closed-form warm start,
the PG-DPIR solver with its DPIR/PGD baselines, classical denoisers
plus an external-denoiser wire protocol, and PSNR/SSIM metrics.
"""

__version__ = "0.1.0"

from .bench import (
    AblationRecord,
    AblationResult,
    MethodComparison,
    compare_methods,
    make_ir_instance,
    make_sisr_instance,
    run_ablation,
    run_variant_to_tolerance,
)
from .denoisers import (
    DenoiserSpec,
    ExternalDenoiser,
    denoise,
    gaussian_smooth,
    median_denoise,
    open_denoiser,
    tv_denoise,
)
from .errors import (
    ConfigError,
    DenoiserError,
    ParameterError,
    ProtocolError,
    ShapeError,
    StepSizeError,
)
from .fidelity import (
    ProxProblem,
    ProxReport,
    grad_F,
    neg_log_likelihood,
    prox_fixed_variance,
    prox_gradient,
    prox_objective,
    prox_pg,
    prox_pg_to_tolerance,
    warm_start_variance,
)
from .forward import (
    DegradationOp,
    NoiseParams,
    apply_A,
    apply_A_adjoint,
    sample_exact_pg,
    sample_gaussian_approx,
    variance_map,
)
from .grid import (
    BlurKernel,
    as_image,
    convolve_circular,
    correlate_circular,
    fft2,
    ifft2,
    reduce_mean,
)
from .imageio import read_imgf, read_png16, write_imgf, write_png16
from .metrics import MetricReport, psnr, ssim, ssim_maps
from .solvers import (
    RunTrace,
    Schedule,
    SolverConfig,
    default_config,
    dpir_baseline,
    init_estimate,
    make_schedule,
    pg_dpir,
    pgd_baseline,
)
from .targets import make_target

__all__ = [
    "AblationRecord",
    "AblationResult",
    "BlurKernel",
    "ConfigError",
    "DegradationOp",
    "DenoiserError",
    "DenoiserSpec",
    "ExternalDenoiser",
    "MethodComparison",
    "MetricReport",
    "NoiseParams",
    "ParameterError",
    "ProtocolError",
    "ProxProblem",
    "ProxReport",
    "RunTrace",
    "Schedule",
    "ShapeError",
    "SolverConfig",
    "StepSizeError",
    "apply_A",
    "apply_A_adjoint",
    "as_image",
    "compare_methods",
    "convolve_circular",
    "correlate_circular",
    "default_config",
    "denoise",
    "dpir_baseline",
    "fft2",
    "gaussian_smooth",
    "grad_F",
    "ifft2",
    "init_estimate",
    "make_ir_instance",
    "make_schedule",
    "make_sisr_instance",
    "make_target",
    "median_denoise",
    "neg_log_likelihood",
    "open_denoiser",
    "pg_dpir",
    "pgd_baseline",
    "prox_fixed_variance",
    "prox_gradient",
    "prox_objective",
    "prox_pg",
    "prox_pg_to_tolerance",
    "psnr",
    "read_imgf",
    "read_png16",
    "reduce_mean",
    "run_ablation",
    "run_variant_to_tolerance",
    "sample_exact_pg",
    "sample_gaussian_approx",
    "ssim",
    "ssim_maps",
    "tv_denoise",
    "variance_map",
    "warm_start_variance",
    "write_imgf",
    "write_png16",
]
