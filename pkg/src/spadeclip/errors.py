"""Exception hierarchy shared across the package."""


class SpadeError(Exception):
    """Base class for every error raised by spadeclip."""


class AudioFormatError(SpadeError, ValueError):
    """WAV file is unreadable or uses an unsupported encoding."""


class DataError(SpadeError, ValueError):
    """Inputs violate a documented precondition (lengths, masks, bounds)."""


class NumericalError(SpadeError, ArithmeticError):
    """A computation produced non-finite values or cannot be carried out."""


class CoverageError(NumericalError):
    """Window/hop combination leaves some samples (almost) uncovered."""


class ConvergenceError(NumericalError):
    """An iterative reference solver failed to converge."""
