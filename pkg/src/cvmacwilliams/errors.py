"""Exception hierarchy.

Validation problems (bad input, unsupported parameters) derive from
ValidationError, numerical failures from NumericalError and bound
validity-window violations from ValidityWindowError. The CLI maps these
to exit codes 2, 3 and 4.
"""


class CVMWError(Exception):
    """Base class for all package errors."""


class ValidationError(CVMWError, ValueError):
    pass


class NumericalError(CVMWError, ArithmeticError):
    pass


class ValidityWindowError(CVMWError):
    """Requested parameter lies outside the window where a bound is proven."""

    def __init__(self, message: str, limit: float):
        super().__init__(message)
        self.limit = limit


class OrderDomainError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class OverflowRangeError(ValidationError):
    pass


class IntegrabilityError(ValidationError):
    pass


class TruncationRequiredError(ValidationError):
    pass


class InvalidAuxiliaryFunctionError(ValidationError):
    def __init__(self, message: str, abscissa: float):
        super().__init__(message)
        self.abscissa = abscissa


class CoverageError(ValidationError):
    pass


class GKPConditionError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class AccuracyError(NumericalError):
    def __init__(self, message: str, partial: float, error_estimate: float):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class ConsistencyError(NumericalError):
    pass


class BudgetExceededError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class EvaluationError(NumericalError):
    pass
