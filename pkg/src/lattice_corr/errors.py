"""Exception types raised by lattice_corr."""


class LatticeCorrError(Exception):
    """Base class for all library errors."""


class InvalidCoupling(LatticeCorrError, ValueError):
    """Coupling constants violate kappa_1 > 0, kappa_m > 0, kappa_s >= 0."""


class DimensionMismatch(LatticeCorrError, ValueError):
    pass


class RootClassificationError(LatticeCorrError):
    """A root of the spectral polynomial sits on the unit circle away from z=1."""


class NonRealCoefficient(LatticeCorrError):
    pass


class InfeasibleFamily(LatticeCorrError, ValueError):
    """The degenerate-family construction produced a non-positive coupling."""


class NotFound(LatticeCorrError):
    pass


class QuadratureNonConvergence(LatticeCorrError):
    """Panel count needed to resolve the oscillations exceeds the cap."""


class DomainError(LatticeCorrError, ValueError):
    pass


class RegimeError(LatticeCorrError, ValueError):
    pass


class InsufficientSamples(LatticeCorrError, ValueError):
    pass


class BlowUp(LatticeCorrError):
    """Integrator left the bounded region |q| <= 1e6."""


class GridMismatch(LatticeCorrError, ValueError):
    pass


class RangeError(LatticeCorrError, ValueError):
    """Operation requested outside the coupling range it is derived for."""
