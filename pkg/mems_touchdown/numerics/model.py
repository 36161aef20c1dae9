"""
Regularized electrostatic potential, force and energy functionals.

All evaluations go through the gap variable g = 1 + u, so the operating regime
g ~ ε does not suffer from cancellation.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Union

import numpy as np
import numpy.typing as npt
from scipy.integrate import trapezoid

from .utils import GapClosedError, ModelParams, Order

if TYPE_CHECKING:
    from .discretization import Field

FloatArray = npt.NDArray[np.float64]
FloatOrArray = Union[float, FloatArray]


def _gap(u: npt.ArrayLike) -> FloatArray:
    g = 1.0 + np.asarray(u, dtype=float)
    if np.any(~(g > 0)):
        raise GapClosedError("deflection reached the substrate (1 + u <= 0)")
    return g


def _like_input(value: FloatArray, u: npt.ArrayLike) -> FloatOrArray:
    if np.ndim(u) == 0:
        return float(value)
    return value


def force(u: npt.ArrayLike, p: ModelParams) -> FloatOrArray:
    """
    Electrostatic force density λ/g² − λε^{m−2}/g^m with g = 1 + u.

    The attractive Coulomb term minus the repulsive regularization; it vanishes
    exactly at the potential minimum u = −1 + ε.

    :param u: Deflection value(s), each greater than −1.
    :param p: Model parameters.
    :raises GapClosedError: If any value is at or below −1.
    :return: The force, with the shape of ``u``.
    """
    g = _gap(u)
    ratio = (p.eps / g) ** (p.m - 2)
    return _like_input(p.lam / g**2 * (1.0 - ratio), u)


def force_derivative(u: npt.ArrayLike, p: ModelParams) -> FloatOrArray:
    """
    Derivative of :func:`force` with respect to u, i.e. φ″(u).

    :param u: Deflection value(s), each greater than −1.
    :param p: Model parameters.
    :return: dforce/du, with the shape of ``u``.
    """
    g = _gap(u)
    ratio = (p.eps / g) ** (p.m - 2)
    return _like_input(p.lam / g**3 * (-2.0 + p.m * ratio), u)


def potential_phi(u: npt.ArrayLike, p: ModelParams) -> FloatOrArray:
    """
    Regularized potential φ_ε(u) = −λ/g + λε^{m−2}/((m−1)g^{m−1}).

    It is the exact antiderivative of :func:`force`, with its minimum at u = −1 + ε.

    :param u: Deflection value(s), each greater than −1.
    :param p: Model parameters.
    :return: The potential, with the shape of ``u``.
    """
    g = _gap(u)
    ratio = (p.eps / g) ** (p.m - 2)
    return _like_input(p.lam / g * (-1.0 + ratio / (p.m - 1)), u)


def energy(field: Field, p: ModelParams, half: bool = True) -> float:
    """
    Discrete gradient-flow energy of a field.

    The elastic term is ∫|u_x|² (second order) or ∫|u_xx|² (fourth order) built
    from nodal differences, the potential term is a composite trapezoid rule.
    With ``half`` the elastic term carries the factor ½ that makes the energy
    non-increasing along u_t = Δu − φ′(u) and u_t = −Δ²u − φ′(u).

    :param field: The deflection, boundary values implied by the order.
    :param p: Model parameters; ``p.order`` selects the elastic term.
    :param half: Use ½ on the elastic term.
    :raises GapClosedError: If any nodal value is at or below −1.
    :return: The energy.
    """
    h = field.grid.h
    full = field.padded()
    if p.order == Order.SECOND:
        elastic = float(np.sum(np.diff(full) ** 2)) / h
    else:
        # ghost reflection u_{-1} = u_1 gives u_xx = 2u_1/h² at the clamped ends
        curvature = np.empty_like(full)
        curvature[1:-1] = (full[:-2] - 2.0 * full[1:-1] + full[2:]) / h**2
        curvature[0] = 2.0 * full[1] / h**2
        curvature[-1] = 2.0 * full[-2] / h**2
        weights = np.ones_like(full)
        weights[0] = weights[-1] = 0.5
        elastic = h * float(np.sum(weights * curvature**2))
    if half:
        elastic *= 0.5
    phi = np.asarray(potential_phi(full, p))
    return elastic + float(trapezoid(phi, dx=h))
