"""Exception hierarchy shared by all modules."""


class HopGameError(Exception):
    """Base class for every error raised by this package."""


class InvariantViolation(HopGameError):
    """An internal invariant failed; indicates a bug rather than bad input."""
