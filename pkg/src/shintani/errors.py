"""Exception types shared across the package."""


class ShintaniError(Exception):
    """Base class for all package-specific errors."""


class NonUnimodular(ShintaniError):
    """Matrix argument is not in GL2(Z) where it must be."""


class BadSemigroupElement(ShintaniError):
    """Matrix violates the congruence / determinant constraints of the acting semigroup."""


class SquareDiscriminant(ShintaniError):
    """Operation requires a nonsquare discriminant (no fundamental automorph exists)."""


class DiscriminantMismatch(ShintaniError):
    """Two quadratic forms that should share a discriminant do not."""


class DegreeMismatch(ShintaniError):
    """Polynomial or moment data does not match the expected degree bound."""


class InsufficientMoments(ShintaniError):
    """Requested operation needs more moments than the distribution carries."""


class PrecisionMismatch(ShintaniError):
    """Two p-adic quantities live at different (p, M) settings."""


class BadCharacteristic(ShintaniError):
    """Coefficient ring where 6 is not invertible."""


class BadIndex(ShintaniError):
    """Hecke operator index incompatible with the level."""


class TwoNotInvertible(ShintaniError):
    """Involution split requires 2 invertible in the ring."""


class IrrationalEigenvalue(ShintaniError):
    """Hecke eigenvalue does not lie in the base ring."""


class SlopeGapUnresolvable(ShintaniError):
    """Newton polygon cannot separate the requested slope at working precision."""


class CriticalSlope(ShintaniError):
    """Slope equals the critical value k+1; unique lifting fails."""


class NoConvergence(ShintaniError):
    """Iterative lift failed to stabilise within the allowed iteration budget."""


class NotEigen(ShintaniError):
    """Symbol is not an eigenvector for the requested operator at working precision."""
