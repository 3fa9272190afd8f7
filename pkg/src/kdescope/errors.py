"""Exception hierarchy shared by every module."""


class KdeError(Exception):
    """Base class for all errors raised by kdescope."""


class InvalidArgument(KdeError, ValueError):
    pass


class InvalidBandwidth(InvalidArgument):
    pass


class DegenerateBandwidth(KdeError, ArithmeticError):
    """A data-driven bandwidth collapsed to zero (e.g. tied observations)."""


class DegenerateSample(KdeError, ValueError):
    """The sample has no spread, so a scale estimate is zero."""


class UnsupportedOperation(KdeError, NotImplementedError):
    pass


class OutOfRange(InvalidArgument):
    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)


class DomainViolation(InvalidArgument):
    pass


class NumericOverflow(KdeError, ArithmeticError):
    pass


class CriterionFailure(KdeError, ArithmeticError):
    pass


class PluginFailure(KdeError, ArithmeticError):
    pass


class InvalidIcvParams(InvalidArgument):
    pass


class IngestionFailure(KdeError, ValueError):
    pass


class ParseFailure(IngestionFailure):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
