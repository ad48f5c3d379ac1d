"""Exception hierarchy shared by all farscope modules."""


class FarscopeError(Exception):
    """Base class for all errors raised by farscope."""


class DomainError(FarscopeError, ValueError):
    """Argument outside the supported domain of a special function."""


class ConfigError(FarscopeError, ValueError):
    """Invalid scene, run configuration or parameter."""


class GeometryError(FarscopeError):
    """Degenerate geometry, e.g. a discretization with no cells."""


class SingularSystemError(FarscopeError):
    """A linear system could not be factorized reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class OracleError(FarscopeError):
    """An analytic reference solution failed to converge."""


class NumericError(FarscopeError):
    """An iterative numerical routine did not converge."""


class DegenerateInputError(FarscopeError, ValueError):
    """Input data carry no information for the requested operation."""


class DegenerateSpectrumError(FarscopeError):
    """Every eigenvalue falls below the cutoff."""


class FormatError(FarscopeError):
    """Malformed far-field matrix file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
