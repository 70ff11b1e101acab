"""Exception hierarchy shared by all optomech modules."""


class OptomechError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(OptomechError, ValueError):
    """A physical or reduced parameter lies outside its allowed domain."""


class DomainError(OptomechError, ValueError):
    """An operation was applied outside its mathematical domain."""


class MarginalPoleError(DomainError):
    """A rational function has a pole on (or numerically on) the real axis."""


class MarginalSpectrumError(DomainError):
    """A spectrum has a root or pole on the real axis and cannot be factorized."""


class NotASpectrumError(DomainError):
    """A rational function meant to be a power spectrum is negative somewhere."""


class DivergentIntegralError(DomainError):
    """A half-line integral does not converge."""


class StationarityError(OptomechError):
    """The dynamics are not strictly stable, so steady-state moments do not exist."""


class ControllerSynthesisError(OptomechError):
    """The synthesized feedback loop failed an internal consistency check."""


class PhysicalityError(OptomechError):
    """A covariance matrix violates the uncertainty relation beyond tolerance."""


class OracleFailure(OptomechError):
    """An oracle solver did not converge."""


class ConfigError(OptomechError):
    """A sweep configuration could not be parsed or validated."""
