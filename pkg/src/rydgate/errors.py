"""Exception hierarchy shared by all rydgate modules."""


class RydgateError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RydgateError):
    """Invalid setting, file, or run configuration (CLI exit code 2)."""


class NumericalError(RydgateError):
    """A numerical procedure failed to converge or produced garbage (CLI exit code 1)."""


class SpectrumError(NumericalError):
    """Quadrature of a finite Fourier transform did not reach its tolerance."""


class PropagationError(NumericalError):
    """Time integration stalled or returned an invalid state."""


class PhaseExtractionError(NumericalError):
    """Computational-basis amplitude too small to define a gate phase."""


class BlockadeError(NumericalError):
    """Leakage-model evaluation at a pole or failed bracketing."""
