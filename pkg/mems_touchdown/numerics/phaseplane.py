"""
Phase-plane analysis of Laplacian equilibria.

After rescaling x by √λ, an equilibrium with interior minimum −1 + α is the
trajectory of u″ = f(u) from (−1 + α, 0) to u = 0, and it solves the problem
at λ = l(α)², where l(α) is the x-length of that trajectory. Folds of the
bifurcation diagram are the extrema of l.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq, minimize_scalar
from scipy.special import comb

from .model import force
from .utils import (
    BracketFailure,
    GapClosedError,
    ModelParams,
    NumericalFailure,
    ValidationError,
)

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IndexArray = npt.NDArray[np.intp]

QUAD_RTOL = 1e-10
# smallest α/ε − 1 searched on the large-norm piece
UPPER_GAP_FLOOR = 1e-10


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise GapClosedError(f"alpha must lie in (0, 1], got {alpha}")


def l0(alpha: float) -> float:
    """
    Closed-form trajectory length of the unregularized problem.

    :param alpha: The gap 1 + min u, in (0, 1].
    :raises GapClosedError: Outside (0, 1].
    """
    _check_alpha(alpha)
    root = math.sqrt(1.0 - alpha)
    return math.sqrt(alpha / 2) * (
        root + alpha * math.log1p(root) - alpha * math.log(math.sqrt(alpha)))


@lru_cache(maxsize=None)
def critical_alpha() -> float:
    """Maximiser α_c of :func:`l0`, about 0.612."""
    res = minimize_scalar(lambda a: -l0(a), bounds=(1e-3, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def lambda_c() -> float:
    """The unregularized fold λ_c = l0(α_c)², about 0.350."""
    return l0(critical_alpha()) ** 2


def _reduced_gap_integrand(s: float, alpha: float, eps: float, m: int) -> float:
    # F/s² with g = α + s², where F is the potential difference along the trajectory
    g = alpha + s * s
    value = 1.0 / (alpha * g)
    if eps > 0:
        ratio = eps ** (m - 2) / (m - 1)
        value -= ratio * sum(g ** (k - m + 1) * alpha ** (-k - 1) for k in range(m - 1))
    return math.sqrt(2.0) / math.sqrt(value)


def l_eps(alpha: float, eps: float, m: int, rtol: float = QUAD_RTOL) -> float:
    """
    Trajectory length l_ε(α) by adaptive quadrature.

    The inverse square-root singularity at u = −1 + α is removed by the
    substitution u = −1 + α + s², after which the integrand is smooth on
    [0, √(1 − α)].

    :param alpha: The gap at the trajectory's turning point.
    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param rtol: Relative quadrature tolerance.
    :raises GapClosedError: If alpha ≤ eps, where no such trajectory exists.
    :return: The half-length of the equilibrium, √λ.
    """
    _check_alpha(alpha)
    if alpha <= eps:
        raise GapClosedError(f"no trajectory for alpha={alpha} <= eps={eps}")
    if alpha == 1:
        return 0.0
    top = math.sqrt(1.0 - alpha)
    points = [p for p in (math.sqrt(alpha - eps), math.sqrt(alpha)) if 0 < p < top]
    value, err = quad(_reduced_gap_integrand, 0.0, top, args=(alpha, eps, m),
                      epsabs=0.0, epsrel=rtol, limit=500, points=points or None)
    logger.debug(f"l_eps({alpha:.6g}, {eps:g}, {m}) = {value:.12g} +- {err:.1e}")
    return float(value)


def _trajectory(alpha: float, eps: float, m: int, rtol: float) -> tuple[float, float]:
    # integrates u′ = y, y′ = f(u), q′ = u² up to u = 0
    _check_alpha(alpha)
    if alpha <= eps:
        raise GapClosedError(f"no trajectory for alpha={alpha} <= eps={eps}")
    if alpha == 1:
        return 0.0, 0.0
    unit = ModelParams(1.0, eps, m)

    def rhs(_x: float, state: FloatArray) -> list[float]:
        return [state[1], float(force(state[0], unit)), state[0] ** 2]

    def reaches_zero(_x: float, state: FloatArray) -> float:
        return float(state[0])

    reaches_zero.terminal = True  # type: ignore[attr-defined]
    reaches_zero.direction = 1  # type: ignore[attr-defined]
    sol = solve_ivp(rhs, (0.0, 1e4), [alpha - 1.0, 0.0, 0.0], method="DOP853",
                    events=reaches_zero, rtol=rtol, atol=1e-14)
    if sol.status != 1 or not len(sol.t_events[0]):
        raise NumericalFailure(f"trajectory from alpha={alpha} never reached u = 0")
    return float(sol.t_events[0][0]), float(sol.y_events[0][0][2])


def l_eps_ode(alpha: float, eps: float, m: int, rtol: float = 1e-12) -> float:
    """
    Trajectory length by integrating u′ = y, y′ = f(u) from (−1 + α, 0) to u = 0.

    An independent route to :func:`l_eps`.

    :raises GapClosedError: If alpha ≤ eps.
    :raises NumericalFailure: If the trajectory does not reach u = 0.
    """
    return _trajectory(alpha, eps, m, rtol)[0]


def trajectory_norm_sq(alpha: float, eps: float, m: int, rtol: float = 1e-12) -> float:
    """
    Squared norm ‖u‖² on (−1, 1) of the equilibrium with minimum −1 + α.

    With ξ = l·x the half profile is the trajectory itself, so the norm is
    2/l times the integral of u² along it. Together with λ = l_ε(α)² this
    parametrises the Laplacian bifurcation diagram by α.

    :raises GapClosedError: If alpha ≤ eps.
    :raises NumericalFailure: If the trajectory does not reach u = 0.
    """
    length, integral = _trajectory(alpha, eps, m, rtol)
    if length == 0:
        return 0.0
    return 2.0 * integral / length


class LengthCurve(NamedTuple):
    """
    Samples of l_ε(α).

    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param alpha: Increasing sample points in (ε, 1].
    :param length: l_ε at the samples.
    :param alpha_max: The sampled interior local maximiser, None when l_ε is monotone.
    :param alpha_min: The sampled local minimiser below alpha_max, if any.
    """

    eps: float
    m: int
    alpha: FloatArray
    length: FloatArray
    alpha_max: float | None
    alpha_min: float | None

    @property
    def length_sq(self) -> FloatArray:
        """λ = l² at the samples."""
        return np.asarray(self.length**2)


def _sample_alphas(eps: float, n_log: int, n_lin: int) -> FloatArray:
    if eps == 0:
        return np.asarray(np.geomspace(1e-4, 1.0, n_log + n_lin))
    knee = min(2.0 * eps, 1.0)
    near = eps + (knee - eps) * np.geomspace(1e-6, 1.0, n_log)
    far = np.linspace(knee, 1.0, n_lin)
    return np.asarray(np.unique(np.concatenate((near, far))))


def length_curve(eps: float, m: int, n_log: int = 150, n_lin: int = 150) -> LengthCurve:
    """
    Sample l_ε(α) densely enough to isolate its extrema.

    Samples are geometric in α − ε below α = 2ε, where l_ε diverges, and
    uniform in α above.

    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param n_log: Number of geometric samples.
    :param n_lin: Number of uniform samples.
    :return: The sampled curve.
    """
    ModelParams(1.0, eps, m).validate()
    if n_log + n_lin < 200:
        raise ValidationError("a length curve needs at least 200 samples")
    alpha = _sample_alphas(eps, n_log, n_lin)
    length = np.array([l0(a) if eps == 0 else l_eps(a, eps, m) for a in alpha])
    peaks, troughs = _interior_extrema(length)
    if not len(peaks):
        logger.info(f"l_eps is monotone at eps={eps:g}, no folds")
        return LengthCurve(eps, m, alpha, length, None, None)
    # the divergence as alpha -> eps is not a fold
    i_max = int(peaks[-1])
    below = troughs[troughs < i_max]
    alpha_min = float(alpha[below[-1]]) if len(below) else None
    return LengthCurve(eps, m, alpha, length, float(alpha[i_max]), alpha_min)


def _interior_extrema(length: FloatArray) -> tuple[IndexArray, IndexArray]:
    """Indices of the interior local maxima and minima, from sign changes of the slope."""
    rising = np.diff(length) > 0
    peaks = np.flatnonzero(rising[:-1] & ~rising[1:]) + 1
    troughs = np.flatnonzero(~rising[:-1] & rising[1:]) + 1
    return peaks, troughs


def _refine(curve: LengthCurve, alpha0: float, sign: float) -> float:
    i = int(np.searchsorted(curve.alpha, alpha0))
    lo = curve.alpha[max(i - 1, 0)]
    hi = curve.alpha[min(i + 1, len(curve.alpha) - 1)]

    def length(a: float) -> float:
        return l0(a) if curve.eps == 0 else l_eps(a, curve.eps, curve.m)

    res = minimize_scalar(lambda a: sign * length(a), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(length(float(res.x)) ** 2)


def fold_points_from_curve(curve: LengthCurve) -> tuple[float | None, float | None]:
    """
    Fold values (λ_c^(1), λ_c^(2)) as the squared interior extrema of l_ε.

    The second fold is None when l_ε is monotone below its maximum, and both
    are None above ε_c.
    """
    if curve.alpha_max is None:
        return None, None
    lambda_c1 = _refine(curve, curve.alpha_max, -1.0)
    if curve.alpha_min is None:
        return lambda_c1, None
    return lambda_c1, _refine(curve, curve.alpha_min, 1.0)


def switching_window(eps: float, m: int) -> tuple[float, float] | None:
    """The bistable interval (λ_c^(2), λ_c^(1)), or None above ε_c."""
    lambda_c1, lambda_c2 = fold_points_from_curve(length_curve(eps, m))
    if lambda_c1 is None or lambda_c2 is None:
        return None
    return lambda_c2, lambda_c1


def gap_for_lambda(lam: float, curve: LengthCurve, upper: bool) -> float:
    """
    Invert λ = l_ε(α)² on one monotone piece of a regularized length curve.

    Near α = ε the map α ↦ λ is ill-conditioned but its inverse is not, so
    large-norm equilibria are best labelled by the gap found here.

    :param lam: The target λ.
    :param curve: A length curve with ε > 0.
    :param upper: Search the large-norm piece (ε, alpha_min) rather than the
        intermediate piece (alpha_min, alpha_max). Above ε_c the only piece
        below the maximum is (ε, 1).
    :raises ValidationError: If the curve is unregularized.
    :raises BracketFailure: If λ is not attained on the piece.
    :return: The gap α.
    """
    if curve.eps == 0 or (curve.alpha_min is None and curve.alpha_max is not None):
        raise ValidationError(f"no large-norm piece on the length curve at eps={curve.eps:g}")
    floor = curve.eps * (1 + UPPER_GAP_FLOOR)
    if curve.alpha_max is None or curve.alpha_min is None:
        low, high = floor, 1.0
    elif upper:
        low, high = floor, curve.alpha_min
    else:
        low, high = curve.alpha_min, curve.alpha_max

    def mismatch(a: float) -> float:
        return l_eps(a, curve.eps, curve.m) ** 2 - lam

    if mismatch(low) * mismatch(high) > 0:
        raise BracketFailure(f"lambda={lam:g} is not attained on alpha in ({low:g}, {high:g})")
    return float(brentq(mismatch, low, high, xtol=1e-18, rtol=1e-14))


def lambda_c1_expansion(eps: float, m: int) -> float:
    """
    Principal fold to first order in ε^{m−2}.

    The correction integral is evaluated at the unregularized maximiser α_c,
    where the first variation of α vanishes.
    """
    alpha_c = critical_alpha()
    lam_c = l0(alpha_c) ** 2
    if eps == 0:
        return lam_c

    def integrand(t: float) -> float:
        q = 1.0 + t * t
        return 2.0 * math.sqrt(q) * sum(q ** (k - m + 2) for k in range(m - 1))

    integral, _ = quad(integrand, 0.0, math.sqrt(1.0 / alpha_c - 1.0), epsrel=QUAD_RTOL)
    coeff = alpha_c ** (3.5 - m) / (m - 1) * math.sqrt(lam_c / 2) * integral
    return lam_c + eps ** (m - 2) * coeff


def divergence_bounds(eta: float, eps: float, m: int,
                      full: bool = False) -> tuple[float, float]:
    """
    Lower and upper bounds on l_ε(ε(1 + η)) as α approaches ε.

    By default only the leading logarithmic terms are returned; ``full`` gives
    the bounds before their small-η expansion.

    :param eta: α/ε − 1, small and positive.
    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :return: (l_lower, l_upper).
    """
    if not eta > 0 or eps * (1 + eta) > 1:
        raise ValidationError(f"eta must be positive with eps*(1+eta) <= 1, got {eta}")
    upper_coeff = math.sqrt(eps / 2) * math.sqrt((m - 1) / (m - 2))
    if not full:
        return (-(eps**1.5) * math.log(eta) / math.sqrt(m - 2),
                -upper_coeff * math.log(eta))
    lower = (eps**1.5 / math.sqrt(m - 2) * (1 + (m + 1) * eta / 2)
             * math.log(2 * (1 - eps) / (eps * eta) + (m - 3) * eta / 2))
    g = sum(comb(m - 2, k, exact=True) * eta**k for k in range(1, m - 1))
    g /= (1 + eta) ** (m - 2)
    return lower, -upper_coeff * math.log(g)
