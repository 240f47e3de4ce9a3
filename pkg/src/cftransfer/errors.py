"""Exception types shared across the package.

Each class maps to one CLI exit code (see ``cli.EXIT_CODES``).
"""


class CFError(Exception):
    """Base class for every error raised on purpose by this package."""


class InvalidInput(CFError, ValueError):
    """Malformed word, digit vector, set description or parameter."""


class BudgetExceeded(CFError):
    """A computation hit its enumeration, radius or precision cap.

    ``partial`` carries whatever was computed before the cap was hit.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CheckFailure(CFError):
    """A certificate, precondition or verification step did not hold."""


class PreconditionError(CheckFailure):
    """An operation refused to run because a required hypothesis is unverified."""


class CorruptionError(CheckFailure):
    """A digit stream does not match the schedule that supposedly produced it."""


class TruncationError(CheckFailure):
    """A finite prefix ends inside an inserted block (strict mode only)."""
