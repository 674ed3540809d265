"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class VerificationError(AssertionError):
    """A claimed count, pattern or identity failed to hold.

    ``witness`` carries whatever data reproduces the failure.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NumericError(RuntimeError):
    """Quadrature or series evaluation did not reach the requested accuracy."""


class OrientationError(NumericError):
    """The imaginary part of a computed period matrix is not positive definite."""
