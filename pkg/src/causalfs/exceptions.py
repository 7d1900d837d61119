"""Exception and warning classes shared across the package."""

from sklearn.exceptions import ConvergenceWarning

__all__ = [
    "ConvergenceWarning",
    "DataError",
    "DegenerateDesignError",
    "DegenerateLabelsError",
    "DegenerateScenarioError",
    "NumericalError",
    "SingularSystemError",
]


class DataError(ValueError):
    """Input data cannot be used as given."""


class DegenerateDesignError(DataError):
    pass


class DegenerateLabelsError(DataError):
    pass


class DegenerateScenarioError(DataError):
    pass


class NumericalError(ArithmeticError):
    """A solver could not produce a usable answer."""


class SingularSystemError(NumericalError):
    pass
