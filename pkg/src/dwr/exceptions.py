"""Exception hierarchy shared by every module."""


class DWRError(Exception):
    """Base class for all package errors."""


class ContractError(DWRError, ValueError):
    """Inputs violate a documented precondition (shapes, ranges, NaNs)."""


class DivergenceError(DWRError, ArithmeticError):
    """An iterative solver produced a non-finite objective.

    ``iteration`` is the iteration at which the blow-up was detected and
    ``trace`` holds the finite objective values recorded before it.
    """

    def __init__(self, message, iteration=None, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = list(trace) if trace is not None else []


class SingularDesignError(DWRError, ArithmeticError):
    """A (weighted) design matrix is rank deficient."""


class DegenerateCorrelationError(DWRError, ValueError):
    """Two distinct columns are perfectly correlated."""


class DegenerateColumnError(DWRError, ValueError):
    """A column has zero (weighted) variance."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class StarvationError(DWRError, RuntimeError):
    """Biased sample selection accepts too few candidates to make progress."""


class InsufficientEnvironmentsError(DWRError, ValueError):
    """Stability metrics need at least two environments."""


class GroundTruthUnavailableError(DWRError, LookupError):
    """An operation needs the generating ground truth but none is attached."""


class ConfigError(DWRError, ValueError):
    """A scenario or real-data config document is malformed."""


class IngestionError(DWRError, ValueError):
    """A CSV file could not be read into a dataset."""

    def __init__(self, message, path=None, column=None):
        super().__init__(message)
        self.path = path
        self.column = column


class ScenarioFailure(DWRError, RuntimeError):
    """Too many cells of a scenario failed numerically."""
