"""Exception types shared across the package."""


class BvpaError(Exception):
    """Base class for estimation and data errors."""


class DegenerateDataError(BvpaError, ValueError):
    """Data or sufficient statistics admit no finite estimate."""


class ConvergenceError(BvpaError, ArithmeticError):
    """An iteration failed to converge or left its parameter domain."""


class PreconditionError(BvpaError, ValueError):
    """Arguments violate a documented precondition."""


class DataFormatError(BvpaError, ValueError):
    """Input file could not be parsed."""
