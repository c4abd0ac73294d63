"""Exception types raised across the package."""


class DirectInfoError(ValueError):
    """Base class for all errors raised by directinfo."""


class ParseError(DirectInfoError):
    """A delimited-text source could not be parsed into a dataset."""


class RaggedRowsError(ParseError):
    pass


class DuplicateNameError(ParseError):
    pass


class EmptyDatasetError(ParseError):
    pass


class InsufficientSampleError(DirectInfoError):
    """The joint sample is too small for the requested schedule or levels."""


class InsufficientJointError(InsufficientSampleError):
    """A pair has fewer pairwise-complete observations than required."""


class DegenerateFitError(DirectInfoError):
    pass


class CalibrationError(DirectInfoError):
    """No quantization level passed the shuffled-data criterion."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BelowMinimumProbesError(DirectInfoError):
    pass


class DivergentError(DirectInfoError):
    """Gaussian information is infinite at perfect correlation."""


class ZeroVarianceError(DirectInfoError):
    pass


class BudgetExceededError(DirectInfoError):
    def __init__(self, message, count):
        super().__init__(message)
        self.count = count
