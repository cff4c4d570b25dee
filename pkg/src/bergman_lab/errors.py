"""Exception hierarchy shared by all modules."""


class BergmanLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BergmanLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParameterError(BergmanLabError, ValueError):
    """Inconsistent combination of parameters."""


class ConvergenceError(BergmanLabError, ArithmeticError):
    """An iterative method did not reach its tolerance."""


class ToleranceNotMet(ConvergenceError):
    """Quadrature stopped before reaching the requested tolerance.

    The best available value and its error estimate are kept on the exception.
    """

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class BracketError(BergmanLabError, ValueError):
    """Root-finding target not enclosed by the bracket."""


class SingularityError(BergmanLabError, ArithmeticError):
    """Evaluation at (or mapped to) the point at infinity."""


class LevelAboveMax(BergmanLabError, ValueError):
    """Level at or above the maximum of the function."""


class DegenerateLevel(BergmanLabError, ArithmeticError):
    """Level too close to the maximum for a stable derivative estimate."""


class NoCrossing(BergmanLabError, ArithmeticError):
    """Two rearrangements coincide identically, so no crossing point exists."""
