"""Exception types shared across the package."""


class FairsimError(Exception):
    """Base class for all package errors."""


class ConfigError(FairsimError, ValueError):
    """A configuration value or argument is outside its allowed range."""


class DimensionMismatch(FairsimError, ValueError):
    """Vector or matrix shapes are inconsistent."""


class NumericalError(FairsimError, ArithmeticError):
    """A computation produced non-finite values."""


class SingularSystemError(FairsimError, ArithmeticError):
    """A linear system could not be solved reliably."""


class EmptyQualifiedPool(FairsimError, ValueError):
    """No candidate passes the acceptance rule, so baseline proportions are undefined."""
