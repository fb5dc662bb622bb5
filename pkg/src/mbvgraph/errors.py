"""Exception hierarchy shared by the library and the CLI exit codes."""


class ValidationError(ValueError):
    """Malformed input: bad shapes, labels, files or arguments (exit code 2)."""


class NumericalError(ArithmeticError):
    """A computation is undefined or unstable for the given data (exit code 3)."""


class PositivityError(ValidationError):
    """A probability vector has an entry outside (0, 1)."""


class ThetaOverflowError(NumericalError, OverflowError):
    """Log-probabilities too large to exponentiate."""


class ZeroFrequencyError(NumericalError):
    """Some outcome was never observed and no smoothing was requested."""

    def __init__(self, message, subsets=()):
        super().__init__(message)
        self.subsets = tuple(subsets)


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, iterate=None, gap=None):
        super().__init__(message)
        self.iterate = iterate
        self.gap = gap
