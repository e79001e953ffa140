"""Exception hierarchy shared by all modules.

The CLI maps ``ContractError``/``DomainError`` to exit code 1 and the numeric
failures (``QuadratureError``, ``TruncationError``) to exit code 2.
"""

from typing import Optional


class HDiscError(Exception):
    """Base class for every error raised by this package."""


class ContractError(HDiscError, ValueError):
    """A precondition of an operation was violated."""


class DomainError(HDiscError, ValueError):
    """An argument lies outside the domain of a function."""


class QuadratureError(HDiscError, ArithmeticError):
    def __init__(self, message: str, achieved: float, tolerance: Optional[float] = None):
        super().__init__(f"{message} (achieved {achieved:.3e}, tolerance {tolerance})")
        self.achieved = achieved
        self.tolerance = tolerance


class TruncationError(HDiscError, ArithmeticError):
    def __init__(self, message: str, bound: float, tolerance: float):
        super().__init__(f"{message} (tail bound {bound:.3e} > tolerance {tolerance:.3e})")
        self.bound = bound
        self.tolerance = tolerance
