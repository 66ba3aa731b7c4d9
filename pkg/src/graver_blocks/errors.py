"""Exception types shared across the package."""


class GraverBlocksError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(GraverBlocksError):
    """Block dimensions or matrix shapes are inconsistent."""


class UnsupportedStructureError(StructuralError):
    """The instance shape is valid but outside what an operation supports."""


class DomainError(GraverBlocksError):
    """An argument violates an operation's stated precondition."""


class InputError(GraverBlocksError):
    """Malformed or semantically invalid external input (JSON, CLI flags)."""


class IncompleteBasisError(DomainError):
    """A sign-compatible decomposition could not be completed from the
    supplied basis (some nonzero residual has no fitting element)."""


class ResourceCapError(GraverBlocksError):
    """An enumeration or DP exceeded its configured resource cap."""

    def __init__(self, message, *, cap=None, reached=None):
        super().__init__(message)
        self.cap = cap
        self.reached = reached


class InternalCheckError(GraverBlocksError):
    """A post-hoc self-check of a constructed object failed.  Always a bug
    or a violated guarantee, never a user error."""
