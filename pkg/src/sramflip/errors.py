"""Exception and warning types raised across the package."""


class SramFlipError(Exception):
    """Base class for all package errors."""


class InvalidParamsError(SramFlipError, ValueError):
    pass


class MonostableError(SramFlipError):
    """The cell has fewer than three equilibria (offset beyond the static flipping point)."""


class ConvergenceError(SramFlipError):
    pass


class DegenerateAxisError(SramFlipError):
    pass


class NotConvergedError(SramFlipError):
    """Relaxation hit ``t_max`` before reaching the stable point.

    The partial trajectory is attached as ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NonMonotoneError(SramFlipError):
    pass


class DomainError(SramFlipError):
    """A 1D walker left the range covered by the drift table."""

    def __init__(self, message, value=None, path_index=None):
        super().__init__(message)
        self.value = value
        self.path_index = path_index


class EnsembleError(SramFlipError):
    """One or more paths of an ensemble failed; ``failures`` maps path index to the error."""

    def __init__(self, message, failures):
        super().__init__(message)
        self.failures = failures


class EmptyEnsembleError(SramFlipError):
    pass


class ParseError(SramFlipError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(SramFlipError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class TruncationWarning(UserWarning):
    """The lower cutoff of the mean-first-passage quadrature is too tight."""


class CensoringWarning(UserWarning):
    pass
