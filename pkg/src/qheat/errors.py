"""Exception types raised across the package."""


class QDomainError(ValueError):
    """A q-calculus primitive was called outside its domain."""


class LatticeError(ValueError):
    """A point is not on the geometric lattice, or has no q-neighbour on it."""


class SpectrumError(ValueError):
    """Eigenvalue sequence violates positivity or ordering.

    ``index`` is the 1-based position of the first offending entry.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateDenominatorError(ArithmeticError):
    """Source-recovery denominator vanished for mode ``mode`` (1-based)."""

    def __init__(self, message, mode):
        super().__init__(message)
        self.mode = mode
