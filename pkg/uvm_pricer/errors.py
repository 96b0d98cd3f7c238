from typing import Optional


class PricingError(Exception):
    """Base error: a machine-readable ``name`` plus a human ``message``."""

    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.name = name
        self.message = message

    def __reduce__(self):
        # Ray workers pickle errors back to the driver
        return (self.__class__, (self.name, self.message))


class DomainError(PricingError):
    pass


class CorrelationError(PricingError):
    def __init__(self, name: str, message: str, min_eigenvalue: Optional[float] = None):
        super().__init__(name, message)
        self.min_eigenvalue = min_eigenvalue

    def __reduce__(self):
        return (self.__class__, (self.name, self.message, self.min_eigenvalue))


class GprFitError(PricingError):
    pass


class BranchError(PricingError):
    pass


class SqpError(PricingError):
    pass


class PayoffError(PricingError):
    pass


class GridError(PricingError):
    pass


class ReductionError(PricingError):
    pass


class NumericalFailure(PricingError):
    """Raised when a single grid point fails; identifies the (n, p) location."""

    def __init__(self, n: int, p: int, cause: Exception):
        super().__init__(
            "numerical_failure",
            f"solve failed at time index n={n}, point p={p}: {cause}",
        )
        self.n = n
        self.p = p
        self.cause = cause

    def __reduce__(self):
        return (self.__class__, (self.n, self.p, self.cause))


class ConfigError(PricingError):
    pass
