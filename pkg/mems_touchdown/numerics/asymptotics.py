"""
Matched-asymptotics formulas for the large-norm equilibria.

For small ε the upper-branch equilibrium sits at u ≈ −1 + ε on (−x_c, x_c),
climbs back to zero in boundary layers of width 1 − x_c, and joins the two
through inner layers u = −1 + εv(ξ) around ±x_c. The Laplacian layers have
width ε^{1/2}, the bi-Laplacian ones ε^{1/4}.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from numpy.polynomial.legendre import leggauss
from scipy.special import xlogy

from .discretization import Field, Grid
from .inner import (
    InnerProfile,
    inner_bilaplacian_shoot,
    inner_laplacian,
    lambda0c_bilaplacian,
    log_coefficient,
    slope_at_infinity,
)
from .utils import Order, ValidationError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

GAUSS_POINTS = 8


def _eps_log_eps(eps: float) -> float:
    return float(xlogy(eps, eps))


class ExpansionCoeffsL(NamedTuple):
    """
    Matching constants of the Laplacian expansion.

    :param lam: The voltage parameter λ.
    :param m: The regularization exponent.
    :param gamma: The constant γ of the inner far field s∞ξ − β ln ξ + γ.
    """

    lam: float
    m: int
    gamma: float

    @classmethod
    def compute(cls, lam: float, m: int) -> ExpansionCoeffsL:
        """Constants with γ taken from the computed inner profile."""
        gamma = inner_laplacian(lam, m).gamma
        assert gamma is not None
        return cls(lam, m, gamma)

    @property
    def lambda0c(self) -> float:
        """λ₀c = (m − 1)/(2(m − 2))."""
        return (self.m - 1) / (2.0 * (self.m - 2))

    @property
    def lambda1c(self) -> float:
        """Coefficient of ε ln ε in the rescaled voltage λx̄_c²."""
        return -2.0 * self.lambda0c**2

    @property
    def lambda2c(self) -> float:
        """Coefficient of ε in the rescaled voltage λx̄_c²."""
        return 2.0 * self.a1 * self.lambda0c

    @property
    def a_half(self) -> float:
        """Coefficient of ε ln ε·(η − 1) in the boundary layer."""
        return -self.lambda0c

    @property
    def a1(self) -> float:
        """Slope of the O(ε) boundary-layer correction."""
        return self.lambda0c / 2 * math.log(self.lambda0c / self.lam) - self.gamma

    def rescaled_lambda(self, eps: float) -> float:
        """λx̄_c² to O(ε)."""
        return self.lambda0c + _eps_log_eps(eps) * self.lambda1c + eps * self.lambda2c

    def xbar_c(self, eps: float, terms: int = 3) -> float:
        """
        Scaled boundary-layer width x̄_c = (1 − x_c)/ε^{1/2}.

        :param terms: 1 for the leading order, 2 adds the ε ln ε correction,
            3 adds the O(ε) correction.
        """
        if terms not in (1, 2, 3):
            raise ValidationError(f"terms must be 1, 2 or 3, got {terms}")
        bracket = 1.0
        if terms >= 2:
            bracket -= self.lambda0c * _eps_log_eps(eps)
        if terms == 3:
            bracket += self.a1 * eps
        return math.sqrt(self.lambda0c / self.lam) * bracket


class ExpansionCoeffsB(NamedTuple):
    """
    Matching constants of the bi-Laplacian expansion.

    :param lam: The voltage parameter λ.
    :param m: The regularization exponent.
    :param xi0: The translation constant of the inner profile, about −3.77.
    """

    lam: float
    m: int
    xi0: float

    @classmethod
    def compute(cls, lam: float, m: int) -> ExpansionCoeffsB:
        """Constants with ξ₀ taken from the shooting profile."""
        xi0 = inner_bilaplacian_shoot(lam, m).xi0
        assert xi0 is not None
        return cls(lam, m, xi0)

    @property
    def lambda0c(self) -> float:
        """λ₀c = 18(m − 1)/(m − 2), 27 at m = 4."""
        return lambda0c_bilaplacian(self.m)

    @property
    def lambda1c(self) -> float:
        """Coefficient of ε^{1/2} in the rescaled voltage λx̄_c⁴."""
        return -12.0 * (self.m - 1) * self.xi0 / (self.m - 2)

    @property
    def lambda2c(self) -> float:
        """Coefficient of ε ln ε in the rescaled voltage λx̄_c⁴."""
        return -self.lambda0c**2 / 162

    @property
    def alpha1(self) -> float:
        """Value of w_{1/2} at η = 0."""
        return -self.lambda0c / 108

    @property
    def alpha2(self) -> float:
        """Slope of w_{1/2} at η = 0."""
        return self.lambda0c / 27

    @property
    def beta1(self) -> float:
        """β₁ = d₀ = 7λ₀c/81 + ξ₀²/12."""
        return 7 * self.lambda0c / 81 + self.xi0**2 / 12

    @property
    def b0(self) -> float:
        """b₀ = 3√(λ/λ₀c)."""
        return 3.0 * math.sqrt(self.lam / self.lambda0c)

    @property
    def a1(self) -> float:
        """Cubic far-field coefficient of v₁, −2(λ/λ₀c)^{3/4}."""
        return -2.0 * (self.lam / self.lambda0c) ** 0.75

    @property
    def scale(self) -> float:
        """(λ₀c/λ)^{1/4}, the leading x̄_c."""
        return float((self.lambda0c / self.lam) ** 0.25)

    def beta2(self, c1: float) -> float:
        """Slope of w₁ at η = 0 for a chosen c₁."""
        return -self.xi0**2 / 6 + self.scale * c1

    def lambda3c(self, c1: float) -> float:
        """Coefficient of ε in λx̄_c⁴; c₁ is not fixed by the matching."""
        l0c = self.lambda0c
        return (-28 * l0c**2 / 243 + l0c * self.xi0**2 / 18 - 5 * l0c / 729
                - 2 / 3 * self.scale * l0c * c1)

    def rescaled_lambda(self, eps: float, c1: float | None = None) -> float:
        """λx̄_c⁴ through ε ln ε, and through ε when c₁ is given."""
        value = (self.lambda0c + math.sqrt(eps) * self.lambda1c
                 + _eps_log_eps(eps) * self.lambda2c)
        if c1 is not None:
            value += eps * self.lambda3c(c1)
        return value

    def w_half(self, eta: npt.ArrayLike) -> FloatArray:
        """Switchback correction of order ε ln ε in the boundary layer."""
        e = np.asarray(eta, dtype=float)
        a1, a2 = self.alpha1, self.alpha2
        return np.asarray(a1 + a2 * e - (3 * a1 + 2 * a2) * e**2 + (2 * a1 + a2) * e**3)

    def w_one(self, eta: npt.ArrayLike, c1: float) -> FloatArray:
        """
        O(ε) boundary-layer correction for a chosen c₁.

        Logarithmic at η = 0, where it matches the inner profile, and clamped
        at η = 1.
        """
        e = np.asarray(eta, dtype=float)
        b1, b2 = self.beta1, self.beta2(c1)
        cubic = ((2 * b1 + b2 + 5 / 486) * e**3 - (3 * b1 + 2 * b2 + 5 / 486) * e**2
                 + b2 * e + b1)
        weight = 16 / 729 * e**3 - 2 / 27 * e**2 + 2 / 27 * e - 1 / 54
        return np.asarray(cubic + weight * (np.log(3 - 2 * e) - np.log(e)))


def outer_profile_b(eta: npt.ArrayLike, xi0: float, eps: float) -> FloatArray:
    """w₀ + ε^{1/2}w_{1/4} = −1 + 3η² − 2η³ + ξ₀ε^{1/2}η(η − 1)²."""
    e = np.asarray(eta, dtype=float)
    return np.asarray(-1 + 3 * e**2 - 2 * e**3 + xi0 * math.sqrt(eps) * e * (e - 1) ** 2)


def polynomial_moments() -> tuple[float, float]:
    """
    ∫₀¹w₀² dη and ∫₀¹w₀w_{1/4} dη/ξ₀ by Gauss–Legendre quadrature.

    The exact values are 13/35 and −11/210.
    """
    nodes, weights = leggauss(GAUSS_POINTS)
    eta = 0.5 * (nodes + 1.0)
    w0 = outer_profile_b(eta, 0.0, 0.0)
    w_quarter = eta * (eta - 1) ** 2
    return float(0.5 * weights @ w0**2), float(0.5 * weights @ (w0 * w_quarter))


def _taper(eta: FloatArray) -> FloatArray:
    # 1 at the inner layer, 0 with zero slope at the clamped edge
    return np.asarray((1 - eta) ** 2 * (1 + 2 * eta))


def _check_contact(x_c: float, lam: float, eps: float) -> None:
    if not 0 < x_c < 1:
        raise ValidationError(
            f"no interior contact point for lambda={lam:g}, eps={eps:g} (x_c={x_c:.4g})")


def contact_point_laplacian(lam: float, eps: float, m: int, gamma: float | None = None,
                            terms: int = 3) -> float:
    """
    Contact point x_c = 1 − ε^{1/2}x̄_c of the Laplacian upper branch.

    :param lam: The voltage parameter λ.
    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param gamma: The inner constant γ; computed from the inner profile when omitted.
    :param terms: Number of terms kept in x̄_c (1, 2 or 3).
    """
    if gamma is None and terms == 3:
        coeffs = ExpansionCoeffsL.compute(lam, m)
    else:
        coeffs = ExpansionCoeffsL(lam, m, gamma or 0.0)
    return 1.0 - math.sqrt(eps) * coeffs.xbar_c(eps, terms)


def norm_sq_laplacian(lam: float, eps: float, m: int) -> float:
    """
    ‖u‖² ≈ 2[1 − (2/3)√((m − 1)/(2λ(m − 2)))ε^{1/2} − 2ε] on the upper branch.
    """
    width = math.sqrt((m - 1) / (2 * lam * (m - 2)))
    return 2.0 * (1.0 - 2.0 / 3.0 * width * math.sqrt(eps) - 2.0 * eps)


def composite_laplacian(lam: float, eps: float, m: int, grid: Grid,
                        profile: InnerProfile | None = None) -> Field:
    """
    Uniformly valid approximation of the Laplacian upper-branch equilibrium.

    Inside (−x_c, x_c) the inner profile −1 + εv₀ is used. In the boundary
    layers the outer solution is added to ε times the inner correction
    v₀ − (s∞ξ − β ln ξ + γ), which vanishes in the overlap; a cubic taper in η
    switches the correction off at x = ±1 so that u(±1) = 0 holds exactly.

    :param lam: The voltage parameter λ.
    :param eps: The regularization parameter, positive.
    :param m: The regularization exponent.
    :param grid: Where to sample the result.
    :param profile: A Laplacian inner profile at the same (λ, m).
    :raises ValidationError: If the expansion puts x_c outside (0, 1).
    """
    if not eps > 0:
        raise ValidationError("composite expansions need eps > 0")
    if profile is None:
        profile = inner_laplacian(lam, m)
    assert profile.gamma is not None
    coeffs = ExpansionCoeffsL(lam, m, profile.gamma)
    xbar = coeffs.xbar_c(eps)
    x_c = 1.0 - math.sqrt(eps) * xbar
    _check_contact(x_c, lam, eps)
    s_inf = slope_at_infinity(lam, m)
    beta = log_coefficient(m)

    r = np.abs(grid.nodes)
    xi = (r - x_c) / eps**1.5
    values = -1.0 + eps * profile.evaluate(xi)
    layer = r > x_c
    eta = (r[layer] - x_c) / (1.0 - x_c)
    xi_l = xi[layer]
    chi = _taper(eta)
    outer = (-1.0 + eta + (coeffs.a_half * _eps_log_eps(eps) + coeffs.a1 * eps) * (eta - 1)
             + beta * eps * math.log(xbar / eps))
    correction = profile.evaluate(xi_l) - s_inf * xi_l - profile.gamma
    values[layer] = outer + eps * chi * correction + beta * eps * xlogy(chi - 1.0, xi_l)
    logger.debug(f"Laplacian composite: x_c={x_c:.6f}, min={values.min():.6g}")
    return Field(grid, values)


def contact_point_bilaplacian(lam: float, eps: float, m: int, xi0: float | None = None,
                              terms: int = 2, third_order: bool = False) -> float:
    """
    Contact point x_c = 1 − ε^{1/4}x̄_c of the bi-Laplacian upper branch.

    x̄_c = (λ₀c/λ)^{1/4}(1 − (ξ₀/6)ε^{1/2}); ``third_order`` also keeps the
    −(λ₀c/648)ε ln ε term.

    :param xi0: The inner translation constant; computed by shooting when omitted.
    :param terms: 1 for the leading order or 2.
    """
    if terms not in (1, 2):
        raise ValidationError(f"terms must be 1 or 2, got {terms}")
    if xi0 is None and (terms == 2 or third_order):
        coeffs = ExpansionCoeffsB.compute(lam, m)
    else:
        coeffs = ExpansionCoeffsB(lam, m, xi0 or 0.0)
    bracket = 1.0
    if terms == 2:
        bracket -= coeffs.xi0 / 6 * math.sqrt(eps)
    if third_order:
        bracket -= coeffs.lambda0c / 648 * _eps_log_eps(eps)
    return 1.0 - eps**0.25 * coeffs.scale * bracket


def norm_sq_bilaplacian(lam: float, eps: float, m: int) -> float:
    """
    ‖u‖² ≈ 2[1 − (22/35)(18(m − 1)/(λ(m − 2)))^{1/4}ε^{1/4}] on the upper branch.
    """
    w0_sq, _ = polynomial_moments()
    xbar = (lambda0c_bilaplacian(m) / lam) ** 0.25
    return 2.0 * (1.0 - (1.0 - w0_sq) * xbar * eps**0.25)


def composite_bilaplacian(lam: float, eps: float, m: int, profile: InnerProfile,
                          grid: Grid) -> Field:
    """
    Uniformly valid approximation of the bi-Laplacian upper-branch equilibrium.

    The boundary-layer solution w₀ + ε^{1/2}w_{1/4} is corrected by ε times
    v − b₀ξ² − c₀ξ, the part of the inner profile it does not already carry,
    under a taper that keeps u(±1) = u′(±1) = 0. Inside (−x_c, x_c) the inner
    profile −1 + εv is used.

    :raises ValidationError: If the profile is not a bi-Laplacian one, or if
        x_c falls outside (0, 1).
    """
    if profile.order != Order.FOURTH or profile.xi0 is None:
        raise ValidationError("composite_bilaplacian needs a bi-Laplacian inner profile")
    if not eps > 0:
        raise ValidationError("composite expansions need eps > 0")
    assert profile.b0 is not None and profile.c0 is not None
    x_c = contact_point_bilaplacian(lam, eps, m, xi0=profile.xi0)
    _check_contact(x_c, lam, eps)

    r = np.abs(grid.nodes)
    xi = (r - x_c) / eps**0.75
    values = -1.0 + eps * profile.evaluate(xi)
    layer = r > x_c
    eta = (r[layer] - x_c) / (1.0 - x_c)
    xi_l = xi[layer]
    correction = profile.evaluate(xi_l) - profile.b0 * xi_l**2 - profile.c0 * xi_l
    values[layer] = (outer_profile_b(eta, profile.xi0, eps)
                     + eps * _taper(eta) * correction)
    logger.debug(f"bi-Laplacian composite: x_c={x_c:.6f}, min={values.min():.6g}")
    return Field(grid, values)
