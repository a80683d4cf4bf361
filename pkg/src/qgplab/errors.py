"""Exception types shared across the package."""


class QgplabError(Exception):
    """Base class for all package errors."""


class ValidationError(QgplabError):
    """Raised when inputs violate a documented precondition (exit code 2)."""


class NumericalError(QgplabError):
    """Raised when an algorithm fails to converge or loses validity (exit code 3)."""


class FrameError(NumericalError):
    """Raised when a field leaves the hydrodynamical frame (eta reaching 1).

    Carries the first offending grid location and, when raised inside a
    time stepper, the stage index.
    """

    def __init__(self, message: str, x: float | None = None, stage: int | None = None):
        super().__init__(message)
        self.x = x
        self.stage = stage
