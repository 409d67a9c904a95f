"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid link, layout or scenario configuration."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its target accuracy.

    Attributes
    ----------
    estimate : float or None
        Best value obtained before giving up.
    error_bound : float or None
        Error estimate attached to ``estimate``.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class EstimationError(NumericalError):
    """Moment matching did not find a root."""


class UnsupportedOrderError(ValueError):
    """Requested moment order is not covered by the closed-form expansion."""
