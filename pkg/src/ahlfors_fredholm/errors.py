"""Exceptions shared by all modules."""


class FredholmError(Exception):
    """Base class of every error raised by the package."""


class InvalidArgumentError(FredholmError, ValueError):
    """A precondition of an operation does not hold."""
