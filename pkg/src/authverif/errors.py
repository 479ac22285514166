"""Exception types shared across the package."""


class AuthVerifError(Exception):
    """Base class for all package errors."""


class ContractViolation(AuthVerifError, ValueError):
    """An input breaks a documented precondition (shape, hermiticity, range)."""


class DimensionCapError(AuthVerifError, ValueError):
    """A dense construction would exceed the configured dimension cap."""


class OverlapError(ContractViolation):
    """A supposedly orthogonal state overlaps the target projector."""


class UndefinedBoundError(AuthVerifError, ValueError):
    """A bound is undefined for the given inputs (e.g. zero acceptance)."""
