"""Exception hierarchy shared by all modules.

The CLI maps each class onto a process exit code, so the class carries the
meaning and the message names the violated condition or config field.
"""


class DimerwaveError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class ConfigurationError(DimerwaveError):
    """Invalid user input: bad config value, grid too small, unknown key."""

    exit_code = 2


class DomainError(DimerwaveError):
    """Input outside the region where a construction is defined.

    Examples are a subsonic wave speed or an amplitude above the cap.
    """

    exit_code = 2


class ConvergenceError(DimerwaveError):
    """An iterative solver did not reach its tolerance.

    Attributes
    ----------
    history : list of float
        Increment (or residual) norms, one per iteration.
    """

    exit_code = 3

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class VerificationError(DimerwaveError):
    """A verification check failed."""

    exit_code = 4


class InvariantError(DimerwaveError):
    """An internal consistency assertion failed (indicates a bug)."""

    exit_code = 1
