"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, container/IO
errors -> 3, NumericalError -> 4.
"""


class ConfigError(ValueError):
    """Invalid user-supplied configuration (unknown case id, bad flag value)."""


class ShapeError(ValueError):
    """Array dimensions incompatible with the requested operation."""


class DegenerateInputError(ValueError):
    """Input has no usable variation (zero variance, all-zero spectrum)."""


class NumericalError(ArithmeticError):
    """A linear system stayed singular after stabilization, or a fit failed."""


class GmmFitError(NumericalError):
    """EM could not produce a valid mixture after the allowed restarts."""


class InsufficientDataError(ValueError):
    """Fewer samples than the operation needs (e.g. clean pixels < subspace dim)."""


class PipelineError(RuntimeError):
    """A denoising stage failed; the message names the stage."""


class ContainerError(ValueError):
    """Base class for cube container parse errors."""


class BadMagicError(ContainerError):
    """File does not start with the container magic bytes."""


class HeaderError(ContainerError):
    """Header fields invalid (dtype flag, reserved bytes, zero dimension)."""


class DimOverflowError(ContainerError):
    """Header dimensions imply an implausibly large payload."""


class TruncatedError(ContainerError):
    """Payload shorter than the header promises."""


class NonFiniteError(ContainerError):
    """Payload contains NaN or infinite values."""
