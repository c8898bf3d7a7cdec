"""Exception types shared across the package."""


class CardCspError(Exception):
    """Base class for all package errors."""


class ParseError(CardCspError):
    """Malformed instance text. Carries the offending line number."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class CapacityError(CardCspError):
    """Requested problem size exceeds a configured cap."""


class InconsistentSolutionError(CardCspError):
    """A moment solution violates its internal consistency beyond tolerance."""


class NumericalError(CardCspError):
    """A numerical kernel failed (factorization, eigendecomposition, ...)."""
