"""Exception and warning classes shared across the package.

Each error class carries the exit code the command-line front end uses for it.
"""


class UrnError(Exception):
    exit_code = 1


class ValidationError(UrnError, ValueError):
    """Bad argument, bad urn-function parameters, or a value outside its domain."""

    exit_code = 2


class DegeneracyError(UrnError):
    """The urn function coincides with the diagonal on a whole interval."""

    exit_code = 3

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class SingularityError(DegeneracyError):
    """An integration interval contains a fixed point of the urn function."""


class InfeasibleEventError(UrnError):
    exit_code = 3


class InvertibilityError(UrnError):
    """A share trajectory cannot be inverted into a saturation-of-share curve."""

    exit_code = 3


class BudgetExceededError(UrnError):
    exit_code = 4

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget


class NumericalError(UrnError):
    exit_code = 5


class StiffIntegrationWarning(RuntimeWarning):
    pass


class DegeneracyWarning(RuntimeWarning):
    pass


class SparseDataWarning(RuntimeWarning):
    pass


class DegenerateEstimateWarning(RuntimeWarning):
    pass
