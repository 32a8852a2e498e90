"""Exception types shared across the package."""


class BMAlgError(Exception):
    """Base class for all package-specific errors."""


class DomainMismatchError(BMAlgError):
    """Two operands live in different scalar domains."""


class ShapeError(BMAlgError):
    """A shape precondition was violated."""


class ConformabilityError(ShapeError):
    """A ternary product triple is not conformable.

    ``leg`` names which of the three legs (0, 1 or 2) failed, or the
    background when the cubic weight hypermatrix has the wrong side.
    """

    def __init__(self, message, leg=None):
        super().__init__(message)
        self.leg = leg


class BudgetExceededError(BMAlgError):
    """An exhaustive search would exceed its configured budget."""


class ReductionHypothesisError(BMAlgError):
    """The slice-reduction hypothesis failed; carries the first offender."""

    def __init__(self, message, k=None, entry=None):
        super().__init__(message)
        self.k = k
        self.entry = entry


class FactorabilityError(BMAlgError):
    """A block of a flattening inverse is not rank one, so no outer
    inverse pair exists."""

    def __init__(self, message, block=None, minor=None):
        super().__init__(message)
        self.block = block
        self.minor = minor


class CompletionError(BMAlgError):
    """No invertible completion of a decomposition pair was found."""


class CertificateError(BMAlgError):
    """A certificate failed its own consistency checks."""
