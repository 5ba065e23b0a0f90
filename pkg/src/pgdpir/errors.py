"""Exception types shared across the package.

The CLI maps these onto process exit codes: config errors exit 2,
solver errors exit 3, wire-protocol errors exit 4.
"""


class ShapeError(ValueError):
    """Image/kernel dimensions are inconsistent with an operation."""


class ParameterError(ValueError):
    """A numeric parameter is outside its valid range."""


class ConfigError(ValueError):
    """A run configuration file or CLI override is invalid."""


class StepSizeError(RuntimeError):
    """Inner gradient descent diverged; the step size is too large."""


class DenoiserError(RuntimeError):
    """A denoiser (built-in or external process) failed."""


class ProtocolError(DenoiserError):
    """An external denoiser violated the wire protocol."""
