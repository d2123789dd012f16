"""Exception hierarchy shared by the library and the CLI."""


class MixGLRError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(MixGLRError, ValueError):
    """Malformed model, design or experiment configuration."""


class DomainError(MixGLRError, ValueError):
    """An input lies outside the domain of the requested operation."""


class DesignError(MixGLRError, ValueError):
    """Test parameters cannot be derived from the given inputs."""


class NumericError(MixGLRError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Attributes
    ----------
    achieved : float or None
        Best tolerance reached before giving up, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class UsageError(MixGLRError, RuntimeError):
    """An object was used in a state that does not allow the call."""
