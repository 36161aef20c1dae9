"""
Truncated far-field series of the bi-Laplacian inner profile.

v = v₀ + ε^{1/2}v₁ + εv₂ behaves like b₀ξ² as ξ → ∞. Each term is a finite sum
of powers and logarithms of ξ whose coefficients follow from the first integral
−v‴v′ + ½v″² + λ/v − λ/((m−1)v^{m−1}) = C; the remainder is O(ln ξ/ξ³).
"""
from __future__ import annotations

import math
from enum import Enum
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from .utils import ValidationError

FloatArray = npt.NDArray[np.float64]

# smallest ξ at which the series is evaluated
ASYMPTOTIC_XI = 10.0


class FarFieldTerm(Enum):
    """Which term of the inner expansion to evaluate."""

    V0 = "v0"
    V1 = "v1"
    V2 = "v2"


def quadratic_coefficient(lam: float, m: int) -> float:
    """b₀ from 2b₀² = C = λ(m − 2)/(m − 1)."""
    return math.sqrt(lam * (m - 2) / (2.0 * (m - 1)))


class FarFieldCoeffs(NamedTuple):
    """
    Free constants of the far-field series.

    Only ``lam``, ``m`` and ``b0`` are fixed by the equation; the remaining
    constants come from matching or from a computed profile and default to zero.
    """

    lam: float
    m: int
    b0: float
    c0: float = 0.0
    d0: float = 0.0
    a1: float = 0.0
    c1: float = 0.0
    d1: float = 0.0
    gamma1: float = 0.0
    g1: float = 0.0
    a2: float = 0.0
    c2: float = 0.0
    d2: float = 0.0
    gamma2: float = 0.0
    g2: float = 0.0

    @classmethod
    def for_model(cls, lam: float, m: int, **constants: float) -> FarFieldCoeffs:
        """Coefficients with b₀ fixed by the first integral."""
        return cls(lam, m, quadratic_coefficient(lam, m), **constants)

    @property
    def delta3(self) -> float:
        """Kronecker flag [m = 3]."""
        return 1.0 if self.m == 3 else 0.0


def eta3(c: FarFieldCoeffs) -> float:
    """Coefficient of ln ξ in v₂."""
    lam, b0, a1 = c.lam, c.b0, c.a1
    return lam * (
        -18 * c.delta3 * a1**2 * b0**2 + 16 * lam * a1**2 + 9 * c.a2 * c.c0 * b0**3
        + 9 * a1**2 * c.c0**2 * b0 - 36 * a1**2 * b0**2 * c.d0 + 9 * a1 * c.c1 * b0**3
    ) / (18 * b0**7)


def eta4(c: FarFieldCoeffs) -> float:
    """Coefficient of ξ ln ξ in v₂."""
    return (6 * c.lam * c.c0 * c.a1**2 + 4 * c.lam * c.a2 * c.b0**2) / (4 * c.b0**5)


def eta5(c: FarFieldCoeffs) -> float:
    """Coefficient of ξ² ln ξ in v₂."""
    return 3 * c.lam * c.a1**2 / (2 * c.b0**4)


def kappa2(c: FarFieldCoeffs) -> float:
    """Coefficient of (ln ξ)² in v₂."""
    return c.lam**2 * c.a1**2 / (12 * c.b0**7)


def b2(c: FarFieldCoeffs) -> float:
    """Coefficient of ξ² in v₂."""
    b0, a1 = c.b0, c.a1
    return -(14 * c.lam * a1**2 - 12 * c.a2 * c.c0 * b0**3 + 9 * a1**2 * c.c0**2 * b0
             - 12 * a1 * c.c1 * b0**3) / (8 * b0**4)


def phi2(c: FarFieldCoeffs) -> float:
    """Coefficient of ln ξ/ξ in v₂."""
    lam, b0 = c.lam, c.b0
    return -(-4 * lam**2 * c.a2 * b0**2 + 7 * lam**2 * c.c0 * c.a1**2
             + 720 * c.a1 * c.gamma1 * b0**7) / (96 * b0**8)


def f2(c: FarFieldCoeffs) -> float:
    """Coefficient of 1/ξ in v₂."""
    lam, b0, c0, a1 = c.lam, c.b0, c.c0, c.a1
    first = lam * c0 * (36 * c0**2 * b0 + 341 * lam - 72 * b0**2 * c.d0
                        - 36 * c.delta3 * b0**2) * a1**2 / (1152 * b0**8)
    second = (lam * c0 * c.c1 + lam * c.d1 * b0 + 60 * c.g1 * b0**4
              + 48 * c.gamma1 * b0**4) * a1 / (8 * b0**5)
    third = lam * (-72 * b0**2 * c.d0 + 25 * lam + 36 * c0**2 * b0
                   - 36 * c.delta3 * b0**2) * c.a2 / (288 * b0**6)
    return first - second + third + lam * c.c2 / (12 * b0**3)


def _v0(c: FarFieldCoeffs, xi: FloatArray) -> FloatArray:
    lam, b0, c0 = c.lam, c.b0, c.c0
    log = np.log(xi)
    inv_sq = lam * (77 * lam - 540 * c0**2 * b0 + 180 * c.delta3 * b0**2
                    + 360 * b0**2 * c.d0) / (21600 * b0**5)
    return np.asarray(
        b0 * xi**2 + c0 * xi + c.d0 + lam / (6 * b0**2) * log
        + lam**2 / (360 * b0**5) * log / xi**2 + lam * c0 / (12 * b0**3) / xi
        + inv_sq / xi**2)


def _v1(c: FarFieldCoeffs, xi: FloatArray) -> FloatArray:
    lam, b0, c0, a1 = c.lam, c.b0, c.c0, c.a1
    log = np.log(xi)
    inv = -lam * (-36 * c0**2 * a1 * b0 + 72 * c.d0 * a1 * b0**2 - 24 * c.c1 * b0**3
                  - 25 * lam * a1 + 36 * c.delta3 * a1 * b0**2) / (288 * b0**6)
    return np.asarray(
        a1 * xi**3 + 3 * a1 * c0 / (2 * b0) * xi**2 + c.c1 * xi + c.d1
        + lam * c0 * a1 / (2 * b0**4) * log + lam * a1 / b0**3 * xi * log
        + lam**2 * a1 / (24 * b0**6) * log / xi + c.gamma1 * log / xi**2
        + inv / xi + c.g1 / xi**2)


def _v2(c: FarFieldCoeffs, xi: FloatArray) -> FloatArray:
    log = np.log(xi)
    return np.asarray(
        c.a2 * xi**3 + b2(c) * xi**2 + c.c2 * xi + c.d2 + kappa2(c) * log**2
        + eta3(c) * log + eta4(c) * xi * log + eta5(c) * xi**2 * log
        + phi2(c) * log / xi + c.gamma2 * log / xi**2 + f2(c) / xi + c.g2 / xi**2)


_TERMS = {FarFieldTerm.V0: _v0, FarFieldTerm.V1: _v1, FarFieldTerm.V2: _v2}


def farfield_series(term: FarFieldTerm, coeffs: FarFieldCoeffs,
                    xi: npt.ArrayLike) -> FloatArray:
    """
    Evaluate one term of the far-field expansion.

    :param term: The term v₀, v₁ or v₂.
    :param coeffs: The series constants.
    :param xi: Points in the asymptotic regime ξ ≥ 10.
    :raises ValidationError: If any point lies below the asymptotic regime.
    :return: The truncated series, shaped like ``xi``.
    """
    points = np.asarray(xi, dtype=float)
    if np.any(points < ASYMPTOTIC_XI):
        raise ValidationError(f"far-field series needs xi >= {ASYMPTOTIC_XI}")
    return _TERMS[term](coeffs, points)


def v0_third_derivative(coeffs: FarFieldCoeffs, xi: npt.ArrayLike) -> FloatArray:
    """Leading behaviour λ/(3b₀²ξ³) of v₀‴, separating rising from falling shots."""
    points = np.asarray(xi, dtype=float)
    return np.asarray(coeffs.lam / (3 * coeffs.b0**2 * points**3))
