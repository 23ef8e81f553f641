"""Numeric substrate exceptions."""

from ..exceptions import CompatibilityError, MmkgcError


class ShapeError(MmkgcError):
    """An array has the wrong shape for an operation."""


class NumericError(MmkgcError):
    """A value became non-finite (the message names the group or loss term)."""


class ContractViolation(MmkgcError):
    """A precondition of an operation does not hold."""


class CheckpointError(CompatibilityError):
    """A checkpoint file is unreadable, malformed or does not match the parameters it is loaded into."""
