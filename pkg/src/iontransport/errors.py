"""Exception taxonomy.

Everything raised on purpose by the package derives from ``IonTransportError``.
The CLI maps ``ConfigError`` to exit code 1 and ``NumericError`` to exit code 2.
"""


class IonTransportError(Exception):
    """Base class for all package errors."""


class ConfigError(IonTransportError):
    """Invalid user input or configuration."""


class InvalidRegionError(ConfigError):
    """Bath regions overlap, are empty, or exceed half the crystal."""


class NumericError(IonTransportError):
    """A numerical procedure failed or produced inconsistent output."""


class DegenerateConfigurationError(NumericError):
    """Two ions sit at the same point."""


class ConvergenceError(NumericError):
    """The structure search did not reach the requested gradient tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnstableEquilibriumError(NumericError):
    """Coupling matrix is not positive definite."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class DegenerateSpectrumError(NumericError):
    """Quadratic eigenproblem has a defective (non-diagonalizable) eigenvalue."""


class NearPoleError(NumericError):
    """Green's function requested too close to one of its poles."""


class DegeneratePairError(NumericError):
    """A pair of normal frequencies sums to zero in a residue sum."""


class NumericConsistencyError(NumericError):
    """A quantity that must be real came out with a sizeable imaginary part."""


class UnphysicalDispersionError(NumericError):
    """Momentum dispersion below the zero-point bound."""


class UndefinedConductivityError(NumericError):
    """Conductivity requested with zero temperature bias."""


class SingularMatrixError(NumericError):
    """Direct inversion hit a singular matrix."""

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class QuadratureError(NumericError):
    """Frequency quadrature did not converge."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class FitError(NumericError):
    """Power-law fit received unusable data."""
