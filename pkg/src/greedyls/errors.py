"""Exception types raised by the solvers and checkers."""


class GreedyLSError(Exception):
    """Base class for all package errors."""


class RankDeficient(GreedyLSError):
    pass


class DegenerateColumn(GreedyLSError):
    """Raised when a new column lies numerically in the span of the tracked ones."""


class InvalidIndex(GreedyLSError, IndexError):
    pass


class NoProgress(GreedyLSError):
    """No eligible atom can reduce the residual before the stop criterion is met."""


class IterationCapExceeded(GreedyLSError):
    pass


class SingularSystem(GreedyLSError):
    pass


class DegeneratePivot(GreedyLSError):
    pass


class BisectionFailed(GreedyLSError):
    pass


class BudgetExceeded(GreedyLSError):
    """Exhaustive enumeration would visit more subsets than allowed."""


class InvalidDelta(GreedyLSError, ValueError):
    pass


class InvalidDims(GreedyLSError, ValueError):
    pass


class InvalidProblem(GreedyLSError, ValueError):
    pass
