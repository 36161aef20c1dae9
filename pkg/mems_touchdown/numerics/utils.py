"""Shared types, exceptions and logging helpers for the numerics package."""
from __future__ import annotations

import logging
import math
from enum import IntEnum
from typing import NamedTuple

logger = logging.getLogger(__name__)

# Add a TRACE level to logging, below DEBUG
TRACE = 5
logging.addLevelName(TRACE, "TRACE")


class Order(IntEnum):
    """Order of the elastic operator, matching the ``--order`` flag."""

    SECOND = 2  # Laplacian, u(±1) = 0
    FOURTH = 4  # bi-Laplacian, u(±1) = u'(±1) = 0


class GapClosedError(ValueError):
    """Raised when a deflection reaches the substrate or an argument leaves its domain."""


class ValidationError(ValueError):
    """Raised when model or run parameters are invalid."""


class NumericalFailure(RuntimeError):
    """Base class for solver failures."""


class StepFailure(NumericalFailure):
    """The time step underflowed while trying to satisfy the acceptance tests."""


class NoConvergence(NumericalFailure):
    """A Newton iteration failed to reach its tolerance."""


class BracketFailure(NumericalFailure):
    """No sign change was found for a bisection."""


class ConvergenceFailure(NumericalFailure):
    """An extrapolated quantity is not stable under refinement."""


class ModelParams(NamedTuple):
    """
    Physical and regularization parameters of the model.

    :param lam: The dimensionless voltage parameter λ.
    :param eps: The regularization parameter ε, in [0, 1).
    :param m: The regularization exponent, an integer of at least 3.
    :param order: The order of the elastic operator.
    """

    lam: float
    eps: float
    m: int = 4
    order: Order = Order.SECOND

    def validate(self) -> ModelParams:
        """
        Check the parameter invariants.

        :raises ValidationError: If any parameter is outside its allowed range.
        :return: The same parameters, for chaining.
        """
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValidationError(f"lambda must be finite and non-negative, got {self.lam}")
        if not 0 <= self.eps < 1:
            raise ValidationError(f"eps must lie in [0, 1), got {self.eps}")
        if int(self.m) != self.m or self.m < 3:
            raise ValidationError(f"m must be an integer of at least 3, got {self.m}")
        if self.order not in tuple(Order):
            raise ValidationError(f"order must be 2 or 4, got {self.order}")
        return self

    def with_lambda(self, lam: float) -> ModelParams:
        """Return a copy with a different λ."""
        return self._replace(lam=lam)

    def __str__(self) -> str:
        return f"lambda={self.lam:g} eps={self.eps:g} m={self.m} order={int(self.order)}"
