class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(ArithmeticError):
    """A numerical method failed to reach its requested accuracy."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SolverError(NumericalError):
    """Iterative solver did not converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message, estimate=residual)
        self.last_iterate = last_iterate
        self.residual = residual


class ConditioningError(NumericalError):
    """A linear operator is (numerically) singular on E."""


class SearchFailure(RuntimeError):
    """Minimizer search terminated with measures too far from the target."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
