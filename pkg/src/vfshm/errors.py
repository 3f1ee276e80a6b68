"""Exception hierarchy shared by every module."""


class VfshmError(Exception):
    """Base class for all package errors."""


class DataError(VfshmError):
    """Input data violates a contract (bad file, mismatched grids, ...)."""


class ConfigError(VfshmError):
    """Invalid configuration or option values."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridMismatchError(DataError):
    pass


class DegenerateBaselineError(DataError):
    pass


class DegenerateSeriesError(DataError):
    pass


class NumericError(VfshmError):
    """Numerical failure inside a solver."""


class IllConditionedError(NumericError):
    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")


class NumericFailureError(NumericError):
    pass


class EvaluationOverflowError(NumericError):
    pass


class SingularAtFrequencyError(NumericError):
    def __init__(self, frequency):
        self.frequency = frequency
        super().__init__(f"dynamic stiffness matrix is singular at {frequency!r} Hz")


class UnstablePoleError(NumericError):
    pass


class SweepFailedError(NumericError):
    pass
