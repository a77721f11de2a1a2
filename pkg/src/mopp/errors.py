"""Exception hierarchy shared by every module of the package."""


class MoppError(Exception):
    """Base class for all package errors."""


class ContractError(MoppError, ValueError):
    """A caller violated an operation precondition (shape, class, sign)."""


class EvaluationError(MoppError, ArithmeticError):
    """An objective or derivative evaluation produced non-finite output."""


class WeightError(MoppError, ValueError):
    """A weight vector is negative or identically zero."""


class ConfigError(MoppError, ValueError):
    """Invalid solver or CLI configuration.

    Attributes:
        key: Name of the offending configuration key, when known.
    """

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class InnerSolveError(MoppError, RuntimeError):
    """The proximal subproblem could not be solved to tolerance.

    The best iterate found is kept in ``best`` (a ``SubproblemSolution`` or
    ``None``) so callers with a looser acceptance test can still use it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BudgetError(InnerSolveError):
    """An inexact variant could not meet its summable error budget."""

    def __init__(self, message, k, achieved, budget, best=None):
        super().__init__(message, best=best)
        self.k = k
        self.achieved = achieved
        self.budget = budget


class OracleError(MoppError, ValueError):
    """A brute-force oracle was asked for an infeasible enumeration."""


class IoError(MoppError, OSError):
    """Writing an output artifact failed."""
