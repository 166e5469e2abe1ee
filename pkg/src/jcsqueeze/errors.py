"""Exception hierarchy shared by every module."""


class JCSqueezeError(Exception):
    """Base class for all package errors."""


class InvalidArgument(JCSqueezeError, ValueError):
    pass


class InvalidState(JCSqueezeError, ValueError):
    pass


class InvalidGrid(JCSqueezeError, ValueError):
    pass


class CutoffTooSmall(JCSqueezeError):
    """Raised when the Fock truncation cannot hold the state.

    ``required_n_max`` carries the smallest cutoff known to be sufficient,
    or ``None`` when it cannot be estimated.
    """

    def __init__(self, message, required_n_max=None):
        super().__init__(message)
        self.required_n_max = required_n_max


class UnsupportedConfiguration(JCSqueezeError):
    pass


class RegimeError(JCSqueezeError, ValueError):
    pass


class ConfigError(JCSqueezeError, ValueError):
    """Field-level validation failure of a run configuration."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericInvariantViolation(JCSqueezeError):
    pass
