"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for toolkit errors."""


class DomainError(LabError, ValueError):
    """Argument outside the supported domain of a function."""


class IndexOrderError(LabError, ValueError):
    """Invalid degree/order pair."""


class ConvergenceError(LabError, RuntimeError):
    """An iterative or adaptive procedure failed to converge."""


class InadmissibleError(LabError, ValueError):
    """Complex frequency for which the cone integrand does not decay."""


class CertificateError(LabError, AssertionError):
    """A sampled inequality of a certificate failed."""


class RankAmbiguityError(LabError, ArithmeticError):
    """Pivot magnitude too close to the noise floor to decide the rank."""


class DisagreementError(LabError, ArithmeticError):
    """Two independent computations of the same quantity disagree."""


class ResolutionError(LabError, ValueError):
    """Grid too coarse (or box too small) for the requested computation."""


class ResonanceError(LabError, ArithmeticError):
    """Fourier symbol too close to zero on the grid."""


class DivergenceError(ConvergenceError):
    """Fixed-point iteration residual kept increasing."""


class InsufficientRangeError(LabError, ValueError):
    """Sample range too narrow to fit a reliable exponent."""
