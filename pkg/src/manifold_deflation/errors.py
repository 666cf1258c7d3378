"""Exception types shared across the package.

The CLI maps these onto exit codes: ParameterError and ParseError exit
with 2, NumericalError (and subclasses) with 3.
"""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class ParseError(ValueError):
    """Malformed input file; message carries the offending location."""


class NumericalError(RuntimeError):
    """A numerical routine failed to produce a usable result."""


class ConvergenceError(NumericalError):
    """An iterative solver stopped before reaching the requested tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual
