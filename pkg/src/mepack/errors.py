"""Exception hierarchy.

Validation-type errors (bad parameters, infeasible requests) derive from
``ValidationError``; failures of a numerical engine derive from
``NumericalError``. The CLI maps the two families onto exit codes 1 and 2.
"""


class ValidationError(ValueError):
    pass


class InvalidVarianceError(ValidationError):
    pass


class UncertaintyViolationError(ValidationError):
    """Raised when 2*dQ*dP/hbar < 1, or == 1 where a mixed state is required."""

    def __init__(self, message, nu=None, pure_boundary=False):
        super().__init__(message)
        self.nu = nu
        self.pure_boundary = pure_boundary


class DimensionMismatchError(ValidationError):
    pass


class NotSelfAdjointError(ValidationError):
    pass


class DegreeCapError(ValidationError):
    pass


class InfeasibleEnergyError(ValidationError):
    pass


class NumericalError(RuntimeError):
    pass


class TruncationError(NumericalError):
    def __init__(self, message, suggested_dim=None):
        super().__init__(message)
        self.suggested_dim = suggested_dim


class TruncationLeakError(NumericalError):
    pass


class SeriesDivergenceError(NumericalError):
    pass


class MCInstabilityError(NumericalError):
    pass
