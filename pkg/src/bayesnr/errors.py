"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError` so that the CLI
can map it to a single exit status.
"""


class BayesnrError(Exception):
    """Base class for all package errors."""


class ConfigError(BayesnrError, ValueError):
    """Invalid experiment configuration."""


class NumericalError(BayesnrError, ArithmeticError):
    """Base class for numerical failures."""


class NonConvergent(NumericalError):
    """An iterative or adaptive procedure exhausted its budget.

    Attributes:
        estimate: best value available when the budget ran out (may be None).
        error: error estimate attached to ``estimate`` (may be None).
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NoBracket(NumericalError):
    """Root search endpoints do not bracket a sign change."""


class IllConditioned(NumericalError):
    """Matrix fails the positive-definiteness / conditioning precondition."""


class NotPositiveDefinite(NumericalError):
    """The SNR denominator matrix is singular or indefinite."""


class NearDegenerateRates(NumericalError):
    """A Laplace noise rate is too close to the signal rate for the closed forms."""


class DivisionNearZero(NumericalError):
    """Observation density underflows where a ratio is required."""


class DegenerateGain(NumericalError):
    """Regression gain too small to rescale by."""


class DegenerateResidual(NumericalError):
    """sigma_x^2 - theta' R^-1 theta is not positive."""


class DegenerateTheta(NumericalError):
    """theta' R^-1 theta is not positive."""


class DegenerateDenominator(NumericalError):
    """The Rayleigh-quotient denominator vanishes."""
