"""Exception types raised across the toolkit."""
from __future__ import annotations

from typing import Any


class PrePostError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(PrePostError, ValueError):
    pass


class InvalidInstrument(PrePostError, ValueError):
    """An operator list violates positivity, Hermiticity or normalization."""


class ZeroAcceptance(PrePostError, ArithmeticError):
    """Every outcome is rejected: the acceptance probability vanishes.

    ``theta`` is filled in when the failure happens at a specific parameter
    value (grid point or simulated trial).
    """

    def __init__(self, message: str, theta: Any = None):
        super().__init__(message)
        self.theta = theta


class NonRankOne(PrePostError, ValueError):
    pass


class ZeroInstrument(PrePostError, ValueError):
    pass


class SingularD(PrePostError, ArithmeticError):
    pass


class RetryExhausted(PrePostError, RuntimeError):
    def __init__(self, message: str, theta: Any = None, retries: int = 0):
        super().__init__(message)
        self.theta = theta
        self.retries = retries
