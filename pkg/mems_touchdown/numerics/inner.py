"""
Inner transition-layer profiles v(ξ) near the contact point.

Near x_c the deflection is u = −1 + εv(ξ). v lies on the unstable manifold of the
fixed point v = 1 and grows linearly (Laplacian) or quadratically (bi-Laplacian)
as ξ → ∞; the constants of that growth are what the matched expansions need.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Any, Callable, NamedTuple

import numpy as np
import numpy.typing as npt
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, least_squares

from .farfield import FarFieldCoeffs, FarFieldTerm, farfield_series, v0_third_derivative
from .utils import TRACE, ConvergenceFailure, Order, ValidationError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

MIN_XI_MAX = 20.0
POINTS_PER_UNIT = 40
ODE_TOL = 1e-12
# amplitude of the departure from v = 1 on the linearised unstable manifold
MANIFOLD_RADIUS = 1e-9
# v − 1 at which the left half of the Laplacian profile switches to integrating v″
LEFT_DEPARTURE = 1e-6
PHASE_SAMPLES = 48
TOUCH_FLOOR = 0.05


class InnerProfile(NamedTuple):
    """
    A computed inner profile on ξ ∈ [−xi_max, xi_max].

    :param order: Operator order the profile belongs to.
    :param lam: The voltage parameter λ.
    :param m: The regularization exponent.
    :param xi: Uniform sample points.
    :param states: v and its derivatives at the samples, one row per point
        (v, v′) for the Laplacian and (v, v′, v″, v‴) for the bi-Laplacian.
    :param xi_max: Half-width of the sampled range.
    :param gamma: Laplacian far-field constant in v ~ s∞ξ − β ln ξ + γ.
    :param b0: Bi-Laplacian quadratic coefficient.
    :param c0: Bi-Laplacian linear coefficient.
    :param d0: Bi-Laplacian constant coefficient.
    :param xi0: Translation constant ξ₀ = c₀(λ₀c/λ)^{1/4}.
    """

    order: Order
    lam: float
    m: int
    xi: FloatArray
    states: FloatArray
    xi_max: float
    gamma: float | None = None
    b0: float | None = None
    c0: float | None = None
    d0: float | None = None
    xi0: float | None = None

    @property
    def v(self) -> FloatArray:
        """Profile values at the samples."""
        return np.asarray(self.states[:, 0])

    def far_field(self, xi: npt.ArrayLike) -> FloatArray:
        """Leading far-field behaviour, valid for large positive ξ."""
        points = np.asarray(xi, dtype=float)
        if self.order == Order.SECOND:
            s_inf = slope_at_infinity(self.lam, self.m)
            beta = log_coefficient(self.m)
            return np.asarray(s_inf * points - beta * np.log(points) + self.gamma)
        coeffs = FarFieldCoeffs(
            self.lam, self.m, self.b0 or 0.0, self.c0 or 0.0, self.d0 or 0.0)
        return farfield_series(FarFieldTerm.V0, coeffs, points)

    def evaluate(self, xi: npt.ArrayLike) -> FloatArray:
        """
        Evaluate v anywhere on the real line.

        Inside the sampled range a cubic spline is used; to the left v = 1 and
        to the right the far-field series.
        """
        points = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.ones_like(points)
        inside = np.abs(points) <= self.xi_max
        out[inside] = CubicSpline(self.xi, self.v)(points[inside])
        right = points > self.xi_max
        if np.any(right):
            out[right] = self.far_field(points[right])
        return out


def slope_at_infinity(lam: float, m: int) -> float:
    """s∞ = √(2λ(m − 2)/(m − 1)), the far-field slope of the Laplacian profile."""
    return math.sqrt(2.0 * lam * (m - 2) / (m - 1))


def log_coefficient(m: int) -> float:
    """β = (m − 1)/(2(m − 2)), the coefficient of −ln ξ in the Laplacian far field."""
    return (m - 1) / (2.0 * (m - 2))


def _check(lam: float, m: int, xi_max: float) -> None:
    if not lam > 0:
        raise ValidationError(f"inner profiles need lambda > 0, got {lam}")
    if int(m) != m or m < 3:
        raise ValidationError(f"m must be an integer of at least 3, got {m}")
    if xi_max < MIN_XI_MAX:
        raise ValidationError(f"xi_max must be at least {MIN_XI_MAX}, got {xi_max}")


def _sample_grid(xi_max: float) -> FloatArray:
    return np.linspace(-xi_max, xi_max, int(2 * POINTS_PER_UNIT * xi_max) + 1)


def _slope(v: npt.ArrayLike, lam: float, m: int) -> FloatArray:
    # √(2G) as √(2λ/(m−1))·(1 − 1/v)·√P(1/v), accurate near v = 1
    w = 1.0 / np.asarray(v, dtype=float)
    poly = sum((m - 2 - j) * w**j for j in range(m - 2))
    return np.asarray(math.sqrt(2.0 * lam / (m - 1)) * (1.0 - w) * np.sqrt(poly))


def _turning_value(m: int) -> float:
    # v″ = λ(1/v² − 1/v^m) is largest here; the Laplacian profile puts ξ = 0 there
    return float((m / 2.0) ** (1.0 / (m - 2)))


def _xi_of(v_end: float, lam: float, m: int) -> float:
    v_star = _turning_value(m)
    value, _ = quad(lambda v: 1.0 / float(_slope(v, lam, m)), v_star, v_end,
                    epsabs=0.0, epsrel=1e-12, limit=500)
    return float(value)


def _gamma_estimate(lam: float, m: int, xi_far: float) -> float:
    """γ from the profile integral truncated at ξ = xi_far plus its leading tail."""
    s_inf = slope_at_infinity(lam, m)
    beta = log_coefficient(m)
    c = lam / s_inf**3
    v_star = _turning_value(m)

    v_end = brentq(lambda v: _xi_of(v, lam, m) - xi_far, v_star, v_star + s_inf * xi_far,
                   xtol=1e-13, rtol=1e-15)

    def excess(v: float) -> float:
        return 1.0 / float(_slope(v, lam, m)) - 1.0 / s_inf - c / v

    body, _ = quad(excess, v_star, v_end, epsabs=0.0, epsrel=1e-12, limit=500)
    # tail of the excess: (e2/v² + e3/v³)/s∞ from expanding (2G/s∞²)^{−1/2}
    a = 2.0 * lam / s_inf**2
    b = 2.0 * lam / ((m - 1) * s_inf**2) if m == 3 else 0.0
    c3 = 2.0 * lam / ((m - 1) * s_inf**2) if m == 4 else 0.0
    e2 = 3 * a**2 / 8 - b / 2
    e3 = 5 * a**3 / 16 - 3 * a * b / 4 - c3 / 2
    tail = (e2 / v_end + e3 / (2 * v_end**2)) / s_inf
    return v_star + beta * math.log(v_star) - beta * math.log(s_inf) - s_inf * (body + tail)


def _left_states(xi: FloatArray, v: FloatArray, lam: float, m: int) -> FloatArray:
    """
    (v, v′) on the left half of the Laplacian profile.

    From the first sample with v − 1 ≥ LEFT_DEPARTURE the second-order equation
    is integrated forward in the departure w = v − 1, along the growing
    direction of the fixed point. Below that sample the linearised manifold
    v′ = √(λ(m − 2))·(v − 1) is used.
    """
    k = math.sqrt(lam * (m - 2))
    states = np.column_stack((v, k * (v - 1.0)))
    start = int(np.argmax(v - 1.0 >= LEFT_DEPARTURE))

    def rhs(_x: float, y: FloatArray) -> list[float]:
        # 1/v² − 1/v^m without cancelling near v = 1
        log_v = math.log1p(y[0])
        return [y[1], -lam * math.exp(-2.0 * log_v) * math.expm1(-(m - 2) * log_v)]

    initial = [v[start] - 1.0, float(_slope(v[start], lam, m))]
    sol = solve_ivp(rhs, (float(xi[start]), 0.0), initial, method="DOP853",
                    t_eval=xi[start:], rtol=ODE_TOL, atol=ODE_TOL * LEFT_DEPARTURE)
    if not sol.success:
        raise ConvergenceFailure(f"left profile integration failed: {sol.message}")
    states[start:, 0] = 1.0 + sol.y[0]
    states[start:, 1] = sol.y[1]
    return states


@lru_cache(maxsize=64)
def inner_laplacian(lam: float, m: int, xi_max: float = 50.0) -> InnerProfile:
    """
    Laplacian inner profile from the first integral ½v′² = G(v).

    ξ = 0 is placed where v″ is largest. The left half of v follows from the first
    integral; v′ comes from integrating v″ on both halves.
    γ is extrapolated from estimates at xi_max and 2·xi_max.

    :param lam: The voltage parameter λ.
    :param m: The regularization exponent.
    :param xi_max: Half-width of the profile and the first γ estimate.
    :raises ConvergenceFailure: If the two γ estimates differ by more than 1e−6.
    :return: The profile with ``gamma`` filled in.
    """
    _check(lam, m, xi_max)
    gamma_x = _gamma_estimate(lam, m, xi_max)
    gamma_2x = _gamma_estimate(lam, m, 2 * xi_max)
    if abs(gamma_2x - gamma_x) > 1e-6:
        raise ConvergenceFailure(
            f"gamma not converged: {gamma_x:.10g} at xi={xi_max:g}, "
            f"{gamma_2x:.10g} at xi={2 * xi_max:g}")
    gamma = gamma_2x + (gamma_2x - gamma_x) / 7.0
    logger.debug(f"gamma(lambda={lam:g}, m={m}) = {gamma:.12g}")

    xi = _sample_grid(xi_max)
    v_star = _turning_value(m)
    right = xi >= 0

    def second_order(_x: float, y: FloatArray) -> list[float]:
        return [y[1], lam * (1.0 / y[0] ** 2 - 1.0 / y[0] ** m)]

    ahead = solve_ivp(second_order, (0.0, xi_max), [v_star, float(_slope(v_star, lam, m))],
                      method="DOP853", t_eval=xi[right], rtol=ODE_TOL, atol=ODE_TOL)
    behind = solve_ivp(lambda _x, y: _slope(y, lam, m), (0.0, -xi_max), [v_star],
                       method="DOP853", t_eval=xi[~right][::-1], rtol=ODE_TOL, atol=ODE_TOL)
    if not (ahead.success and behind.success):
        raise ConvergenceFailure(
            f"profile integration failed: {ahead.message} {behind.message}")
    states = np.vstack((_left_states(xi[~right], behind.y[0][::-1], lam, m), ahead.y.T))
    return InnerProfile(Order.SECOND, lam, m, xi, states, xi_max, gamma=gamma)


def lambda0c_bilaplacian(m: int) -> float:
    """λ₀c = 18(m − 1)/(m − 2)."""
    return 18.0 * (m - 1) / (m - 2)


def _unstable_root(lam: float, m: int) -> complex:
    mu = (lam * (m - 2)) ** 0.25
    return complex(mu / math.sqrt(2), mu / math.sqrt(2))


def _manifold_state(theta: float, xi: npt.ArrayLike, k: complex) -> FloatArray:
    z = MANIFOLD_RADIUS * np.exp(1j * theta + k * np.asarray(xi, dtype=float))
    return np.array([1.0 + z.real, (z * k).real, (z * k**2).real, (z * k**3).real])


def _fourth_order(lam: float, m: int) -> Callable[[float, FloatArray], FloatArray]:
    def rhs(_x: float, y: FloatArray) -> FloatArray:
        v = y[0]
        return np.array([y[1], y[2], y[3], -lam * (1.0 / v**2 - 1.0 / v**m)])
    return rhs


def _touch(_x: float, y: FloatArray) -> float:
    return float(y[0] - TOUCH_FLOOR)


_touch.terminal = True  # type: ignore[attr-defined]
_touch.direction = -1  # type: ignore[attr-defined]


def _shoot(theta: float, lam: float, m: int, xi_end: float, dense: bool = False) -> Any:
    k = _unstable_root(lam, m)
    return solve_ivp(_fourth_order(lam, m), (0.0, xi_end), _manifold_state(theta, 0.0, k),
                     method="DOP853", events=_touch, rtol=ODE_TOL, atol=ODE_TOL,
                     dense_output=dense)


def _rises(theta: float, lam: float, m: int, xi_end: float, b0: float) -> bool:
    sol = _shoot(theta, lam, m, xi_end)
    if sol.status == 1:
        return False
    coeffs = FarFieldCoeffs(lam, m, b0)
    return bool(sol.y[3, -1] > float(v0_third_derivative(coeffs, sol.t[-1])))


def _separatrices(lam: float, m: int, xi_end: float, b0: float) -> list[float]:
    thetas = np.linspace(0.0, 2 * math.pi, PHASE_SAMPLES, endpoint=False)
    labels = [_rises(float(t), lam, m, xi_end, b0) for t in thetas]
    found = []
    for i in range(PHASE_SAMPLES):
        j = (i + 1) % PHASE_SAMPLES
        if labels[i] == labels[j]:
            continue
        lo = float(thetas[i])
        hi = float(thetas[j]) if j else 2 * math.pi
        lo_label = labels[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _rises(mid, lam, m, xi_end, b0) == lo_label:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        found.append(lo)
        logger.log(TRACE, f"separatrix at theta={lo:.15f}")
    return found


def _fit_far_field(zeta: FloatArray, v: FloatArray, lam: float, m: int,
                   b0: float) -> tuple[float, float]:
    base = b0 * zeta**2 + lam / (6 * b0**2) * np.log(zeta)
    basis = np.column_stack((zeta, np.ones_like(zeta)))
    guess = np.linalg.lstsq(basis, v - base, rcond=None)[0]

    def misfit(params: FloatArray) -> FloatArray:
        coeffs = FarFieldCoeffs(lam, m, b0, float(params[0]), float(params[1]))
        return farfield_series(FarFieldTerm.V0, coeffs, zeta) - v

    fit = least_squares(misfit, guess, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return float(fit.x[0]), float(fit.x[1])


@lru_cache(maxsize=32)
def inner_bilaplacian_shoot(lam: float, m: int, xi_max: float = 50.0) -> InnerProfile:
    """
    Bi-Laplacian inner profile by shooting along the unstable manifold of v = 1.

    The two-dimensional manifold is parametrised, up to translation, by the
    phase θ of the departure r₀·Re(e^{iθ}e^{kξ}) with Re k > 0. Trajectories
    either fall to the substrate or rise cubically; the quadratically growing
    profile is the separatrix between the two and is located by bisection in θ.
    The profile is shifted so that its minimum sits at ξ = 0, and c₀, d₀ are
    fitted to the far-field series on [xi_max/2, xi_max].

    :param lam: The voltage parameter λ.
    :param m: The regularization exponent.
    :param xi_max: Half-width of the profile and of the first fitting window.
    :raises ConvergenceFailure: If no quadratically growing separatrix is found,
        or if ξ₀ moves by more than 1e−3 when the fitting window doubles.
    :return: The profile with b0, c0, d0 and xi0 filled in.
    """
    _check(lam, m, xi_max)
    k = _unstable_root(lam, m)
    b0 = math.sqrt(lam * (m - 2) / (2.0 * (m - 1)))
    departure = math.log(1.0 / MANIFOLD_RADIUS) / k.real
    candidates = []
    for theta in _separatrices(lam, m, departure + 60.0, b0):
        sol = _shoot(theta, lam, m, departure + 20.0 + 2.5 * xi_max, dense=True)
        if sol.status == 1:
            continue
        grid = np.arange(0.0, sol.t[-1], 0.01)
        v = sol.sol(grid)[0]
        curvature = sol.y[2, -1]
        if abs(curvature / (2 * b0) - 1.0) > 0.05:
            continue
        candidates.append((float(np.min(v)), theta, sol, grid))
    if not candidates:
        raise ConvergenceFailure(f"no quadratically growing profile for lambda={lam:g}, m={m}")
    v_min, theta, sol, grid = max(candidates, key=lambda c: c[0])
    if v_min >= 1.0:
        raise ConvergenceFailure("separatrix profile never dips below v = 1")

    v = sol.sol(grid)[0]
    i = int(np.argmin(v))
    xi_min = brentq(lambda x: float(sol.sol(x)[1]), grid[max(i - 1, 0)], grid[i + 1],
                    xtol=1e-14)
    if sol.t[-1] < xi_min + 2 * xi_max:
        raise ConvergenceFailure("shooting range too short for the fitting window")

    estimates = []
    for width in (xi_max, 2 * xi_max):
        zeta = np.linspace(width / 2, width, 400)
        estimates.append(_fit_far_field(zeta, sol.sol(zeta + xi_min)[0], lam, m, b0))
    scale = (lambda0c_bilaplacian(m) / lam) ** 0.25
    xi0_x, xi0_2x = (c0 * scale for c0, _ in estimates)
    if abs(xi0_2x - xi0_x) > 1e-3:
        raise ConvergenceFailure(f"xi0 not converged: {xi0_x:.6g} vs {xi0_2x:.6g}")
    c0, d0 = estimates[0]
    logger.debug(f"xi0(lambda={lam:g}, m={m}) = {xi0_x:.8g}, c0={c0:.8g}, d0={d0:.8g}")

    zeta = _sample_grid(xi_max)
    xi = zeta + xi_min
    states = np.empty((zeta.size, 4))
    before = xi < 0
    states[before] = _manifold_state(theta, xi[before], k).T
    states[~before] = sol.sol(xi[~before]).T
    return InnerProfile(Order.FOURTH, lam, m, zeta, states, xi_max,
                        b0=b0, c0=c0, d0=d0, xi0=xi0_x)


def first_integral_residual(profile: InnerProfile) -> float:
    """
    Largest deviation of the conserved first integral along a profile.

    Laplacian: ½v′² − G(v). Bi-Laplacian:
    −v‴v′ + ½v″² + λ/v − λ/((m−1)v^{m−1}) − λ(m−2)/(m−1).
    """
    lam, m = profile.lam, profile.m
    v = profile.states[:, 0]
    if profile.order == Order.SECOND:
        value = 0.5 * profile.states[:, 1] ** 2 - 0.5 * _slope(v, lam, m) ** 2
    else:
        _, d1, d2, d3 = profile.states.T
        value = (-d3 * d1 + 0.5 * d2**2 + lam / v - lam / ((m - 1) * v ** (m - 1))
                 - lam * (m - 2) / (m - 1))
    return float(np.max(np.abs(value)))
