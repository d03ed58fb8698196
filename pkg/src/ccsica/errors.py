"""Exception hierarchy.

``NumericalError`` subclasses map to CLI exit code 3.
"""


class NumericalError(ArithmeticError):
    """Base class for failures of the numerical pipeline."""


class NotSymmetricError(NumericalError, ValueError):
    pass


class ConvergenceError(NumericalError):
    pass


class DegenerateDemixerError(NumericalError):
    """Demixing matrix has a zero row or a (near) zero determinant."""


class SingularDemixerError(DegenerateDemixerError):
    pass


class RankDeficientError(NumericalError):
    """Observation covariance is (numerically) rank deficient."""


class DivergenceError(NumericalError):
    """The contrast became non-finite during optimization."""
