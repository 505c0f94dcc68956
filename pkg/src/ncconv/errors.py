"""Exception hierarchy shared by all ncconv modules."""


class NCConvError(Exception):
    """Base class for every error raised by ncconv."""


class DomainError(NCConvError, ValueError):
    """A position, map or operation does not fit the measure's domain."""


class WeightSumError(NCConvError, ValueError):
    """Atom weights do not sum to one."""


class PoleError(NCConvError, ZeroDivisionError):
    """A transform was evaluated on (or too close to) the support."""


class ConvergenceError(NCConvError, RuntimeError):
    """An iterative solver or an extrapolation did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PreconditionError(NCConvError, ValueError):
    """Inputs violate the existence hypotheses of an operation."""


class NoSolutionError(NCConvError, RuntimeError):
    """A pointwise equation has no admissible solution (or Newton stalled)."""


class NonNormalError(NCConvError, ValueError):
    """A matrix expected to be normal is not."""


class NotPSDError(NCConvError, ValueError):
    """A matrix expected to be positive semidefinite is not."""


class ParseError(NCConvError, ValueError):
    """Syntax error in a measure expression."""

    def __init__(self, line, col, message):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message
