"""Exception hierarchy shared by all sparsecut modules."""


class SparseCutError(Exception):
    """Base class for all errors raised by this package."""


class InstanceFormatError(SparseCutError):
    """Malformed or invalid instance file content."""


class ValidationError(SparseCutError):
    """Inputs violate a documented precondition or guard."""


class SolverError(SparseCutError):
    """A numerical solver failed to converge or produced unusable output."""


class PropertyViolationError(SparseCutError):
    """A certified bound or invariant that must hold was measured false."""
