"""Exception hierarchy shared by every module."""


class SrgmmError(Exception):
    """Base class for all library errors."""


class InvalidParams(SrgmmError, ValueError):
    """Model or operation parameters violate a precondition."""


class InvalidInput(SrgmmError, ValueError):
    """Input data (points, labels, subsets) is malformed for the operation."""


class InvalidSpec(SrgmmError, ValueError):
    """An adversary specification is malformed or out of range."""


class ConvergenceError(SrgmmError, RuntimeError):
    """An iterative numerical method did not converge.

    Attributes:
        residual: last residual measure observed before giving up.
        iterations: number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SplitError(SrgmmError, RuntimeError):
    """Random half-split failed to place every cluster in both halves."""


class ConstructionError(SrgmmError, RuntimeError):
    """A constructed instance failed one of its own hard checks."""


class FormatError(SrgmmError, ValueError):
    """A serialized instance file is malformed."""
