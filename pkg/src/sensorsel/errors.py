"""Exception hierarchy shared by all sensorsel modules."""


class SensorSelectionError(Exception):
    """Base class for every error raised by this package."""


class InvalidMatrix(SensorSelectionError, ValueError):
    """Matrix is empty, not two-dimensional, or holds NaN/Inf."""


class DimensionMismatch(SensorSelectionError, ValueError):
    pass


class NotPositiveDefinite(SensorSelectionError, ArithmeticError):
    """Cholesky factorization met a pivot at or below tolerance."""


class InvalidBudget(SensorSelectionError, ValueError):
    pass


class InfeasibleSubset(SensorSelectionError, ArithmeticError):
    """Selected rows give a singular regularized Gram matrix."""


class TooLargeForExhaustive(SensorSelectionError, ValueError):
    pass


class FeasibleSetExhausted(SensorSelectionError):
    """No candidate can be added without breaking positive definiteness."""


class NumericalBreakdown(SensorSelectionError, ArithmeticError):
    pass


class BoundViolation(SensorSelectionError, AssertionError):
    """A certified inequality failed beyond its numerical slack."""


class ParseError(SensorSelectionError, ValueError):
    def __init__(self, message, *, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ConfigError(SensorSelectionError, ValueError):
    pass
