"""Exception types shared across the package.

The CLI maps each class to a distinct exit code, so errors raised by the
numerical modules should use the narrowest type that fits.
"""


class ShorelakeError(Exception):
    """Base class for package errors."""


class ConfigurationError(ShorelakeError):
    """Invalid run configuration: bad keys, ranges, empty interior,
    mismatched grids."""


class SolverError(ShorelakeError):
    """Iterative solve failed: non-convergence or loss of positive
    definiteness (assembly bug signal)."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericsError(ShorelakeError):
    """Quadrature or extrapolation did not reach the requested accuracy."""


class ExpressionError(ConfigurationError):
    """Malformed field expression; carries the offending position."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position
