"""
Time integration of the regularized gradient flows.

u_t = Δu − force(u) (second order, u(±1) = 0) and u_t = −Δ²u − force(u)
(fourth order, u = u_x = 0 at ±1) are advanced with a first-order semi-implicit
scheme, adaptive step halving on rejection, touchdown detection and front
tracking. The comparison ODEs bounding Laplacian solutions live here as well.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
from scipy.integrate import solve_ivp

from .discretization import Field, LinearOperator, build_operator
from .model import energy, force, force_derivative
from .utils import (
    TRACE,
    GapClosedError,
    ModelParams,
    Order,
    StepFailure,
    ValidationError,
)

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# Touchdown is declared, and fronts are measured, at u = -1 + TOUCHDOWN_FACTOR * eps
TOUCHDOWN_FACTOR = 2.0
# tolerances of the comparison ODE; margins against a bound are judged by comparison_tolerance
COMPARISON_RTOL = 1e-10
COMPARISON_ATOL = 1e-12
# gap at which an unregularized comparison solution is taken to have quenched
QUENCH_GAP = 1e-6


class Scheme(Enum):
    """Treatment of the force in the semi-implicit update."""

    IMEX = "imex"  # force explicit: (I + dt A) u_new = u - dt force(u)
    LINEARIZED = "linearized"  # diagonal force Jacobian moved into the implicit operator


class EvolveConfig(NamedTuple):
    """
    Settings of a time integration run.

    :param dt0: The initial time step.
    :param t_end: The final time.
    :param steady_tol: Steady state once ‖(u_new − u_old)/dt‖_∞ drops below this.
    :param energy_tol: Allowed per-step energy rise relative to |E|.
    :param record_every: Snapshot cadence in accepted steps.
    :param dt_max: Upper limit for the adaptive step.
    :param grow: Step growth factor after each accepted step.
    :param scheme: The semi-implicit scheme.
    :param max_steps: Hard limit on the number of accepted steps.
    """

    dt0: float = 1e-4
    t_end: float = 200.0
    steady_tol: float = 1e-8
    energy_tol: float = 1e-10
    record_every: int = 50
    dt_max: float = 1.0
    grow: float = 1.2
    scheme: Scheme = Scheme.IMEX
    max_steps: int = 500_000

    def validate(self) -> EvolveConfig:
        """Check the configuration invariants."""
        if not self.dt0 > 0:
            raise ValidationError(f"dt0 must be positive, got {self.dt0}")
        if not self.steady_tol > 0:
            raise ValidationError(f"steady_tol must be positive, got {self.steady_tol}")
        if self.t_end < 0 or self.record_every < 1 or self.dt_max < self.dt0:
            raise ValidationError("t_end >= 0, record_every >= 1 and dt_max >= dt0 required")
        return self


class StepResult(NamedTuple):
    """An accepted step: the new field, the step actually taken and the new energy."""

    field: Field
    dt: float
    energy: float
    halvings: int


class Trajectory(NamedTuple):
    """
    Recorded output of :func:`evolve`.

    Front positions are ``nan`` in snapshots without a touchdown region.
    ``step_sizes`` holds every accepted dt and ``snapshot_steps`` the number of
    accepted steps at each snapshot.
    """

    times: list[float]
    snapshots: list[Field]
    energies: list[float]
    front_left: list[float]
    front_right: list[float]
    touchdown_time: float | None
    touchdown_points: tuple[float, ...] | None
    steady: bool
    steps: int
    max_energy_rise: float
    step_sizes: list[float]
    snapshot_steps: list[int]

    @property
    def final(self) -> Field:
        """The last recorded snapshot."""
        return self.snapshots[-1]

    def min_u(self) -> list[float]:
        """Smallest value of every snapshot."""
        return [snap.min() for snap in self.snapshots]

    def max_u(self) -> list[float]:
        """Largest value of every snapshot, boundary zeros included."""
        return [max(float(np.max(snap.values)), 0.0) for snap in self.snapshots]


def _advance(values: FloatArray, p: ModelParams, dt: float, op: LinearOperator,
             scheme: Scheme) -> FloatArray:
    rhs = values - dt * np.asarray(force(values, p))
    if scheme == Scheme.IMEX:
        return op.solve_shifted(rhs, dt)
    jac = dt * np.asarray(force_derivative(values, p))
    return op.solve_shifted(rhs + jac * values, dt, jac)


def _lowest_allowed(field: Field, p: ModelParams) -> float:
    if p.order == Order.SECOND and p.eps > 0:
        return min(field.min(), -1.0 + p.eps) - 1e-12
    return -1.0


def adaptive_step(field: Field, p: ModelParams, dt: float,
                  config: EvolveConfig | None = None,
                  operator: LinearOperator | None = None) -> StepResult:
    """
    Take one semi-implicit step, halving dt until it is accepted.

    The elastic operator is implicit; with ``Scheme.IMEX`` the force is explicit,
    (I + dt·A)u_new = u_old − dt·force(u_old). A step is accepted when every
    value stays above −1 and the energy rises by at most energy_tol·|E|. For the
    Laplacian the new values must also stay above min(min u, −1 + ε), the
    pointwise bound of the exact flow.

    :param field: The current state.
    :param p: Model parameters.
    :param dt: The step to attempt first.
    :param config: Run settings, defaults to :class:`EvolveConfig`.
    :param operator: A prebuilt stiffness operator for the field's grid.
    :raises StepFailure: If dt falls below dt0·1e−12.
    :return: The accepted step.
    """
    if config is None:
        config = EvolveConfig()
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    op = operator or build_operator(field.grid, p.order)
    e_old = energy(field, p)
    allowed = e_old + config.energy_tol * abs(e_old)
    floor = config.dt0 * 1e-12
    lowest = _lowest_allowed(field, p)
    trial = dt
    halvings = 0
    while trial >= floor:
        try:
            new_values = _advance(field.values, p, trial, op, config.scheme)
        except np.linalg.LinAlgError as e:
            logger.log(TRACE, f"Singular step matrix at dt={trial:.3e}: {e}")
        else:
            if np.all(np.isfinite(new_values)) and np.all(new_values > lowest):
                new_field = Field(field.grid, new_values)
                e_new = energy(new_field, p)
                if e_new <= allowed:
                    return StepResult(new_field, trial, e_new, halvings)
                logger.log(TRACE, f"Energy rise {e_new - e_old:.3e} at dt={trial:.3e}")
            else:
                logger.log(TRACE, f"Lower bound crossed at dt={trial:.3e}")
        trial /= 2
        halvings += 1
    raise StepFailure(
        f"time step underflow below {floor:.3e} at min u = {field.min():.6g}; "
        "the force stiffness near the substrate is unresolved")


def step(field: Field, p: ModelParams, dt: float,
         config: EvolveConfig | None = None) -> Field:
    """Advance ``field`` by one accepted step; see :func:`adaptive_step`."""
    return adaptive_step(field, p, dt, config).field


def detect_fronts(field: Field, eps: float) -> tuple[float, float] | None:
    """
    Outer edges of the touchdown region where u < −1 + 2ε.

    :param field: The deflection.
    :param eps: The regularization parameter.
    :return: (x_left, x_right) by linear interpolation between nodes, or None.
    """
    level = -1.0 + TOUCHDOWN_FACTOR * eps
    full = field.padded()
    x = field.grid.full_nodes
    below = np.flatnonzero(full < level)
    if below.size == 0:
        return None
    i, j = int(below[0]), int(below[-1])
    # boundary values are 0 > level, so both neighbours exist
    left = x[i - 1] + (level - full[i - 1]) / (full[i] - full[i - 1]) * (x[i] - x[i - 1])
    right = x[j] + (level - full[j]) / (full[j + 1] - full[j]) * (x[j + 1] - x[j])
    return float(left), float(right)


def _touchdown_points(field: Field, eps: float) -> tuple[float, ...]:
    level = -1.0 + TOUCHDOWN_FACTOR * eps
    u = field.values
    lowest = np.min(u)
    # all nodes sharing the minimum, e.g. the symmetric pair of the fourth-order flow
    picks = np.flatnonzero((u < level) & (u <= lowest + 1e-12 * max(1.0, abs(lowest))))
    return tuple(float(x) for x in field.x[picks])


def evolve(u0: Field, p: ModelParams, config: EvolveConfig | None = None,
           operator: LinearOperator | None = None) -> Trajectory:
    """
    Integrate the flow from ``u0`` until t_end or a steady state.

    :param u0: Initial deflection, every value above −1.
    :param p: Model parameters.
    :param config: Run settings.
    :param operator: A prebuilt stiffness operator for the grid of ``u0``.
    :raises StepFailure: Propagated from :func:`step`.
    :return: The recorded trajectory.
    """
    p.validate()
    config = (config or EvolveConfig()).validate()
    u0.check_gap()
    op = operator or build_operator(u0.grid, p.order)

    t = 0.0
    field = u0
    e_now = energy(field, p)
    times: list[float] = []
    snaps: list[Field] = []
    energies: list[float] = []
    lefts: list[float] = []
    rights: list[float] = []
    step_sizes: list[float] = []
    snapshot_steps: list[int] = []
    touchdown_time: float | None = None
    touchdown_points: tuple[float, ...] | None = None
    max_rise = 0.0

    def record() -> None:
        times.append(t)
        snapshot_steps.append(steps)
        snaps.append(field)
        energies.append(e_now)
        fronts = detect_fronts(field, p.eps)
        lefts.append(fronts[0] if fronts else float("nan"))
        rights.append(fronts[1] if fronts else float("nan"))

    steps = 0
    record()
    dt = config.dt0
    steady = False
    while t < config.t_end and steps < config.max_steps:
        trial = min(dt, config.t_end - t)
        result = adaptive_step(field, p, trial, config, op)
        rate = float(np.max(np.abs(result.field.values - field.values))) / result.dt
        if e_now != 0:
            max_rise = max(max_rise, (result.energy - e_now) / abs(e_now))
        t += result.dt
        step_sizes.append(result.dt)
        field = result.field
        e_now = result.energy
        steps += 1

        if touchdown_time is None and field.min() < -1.0 + TOUCHDOWN_FACTOR * p.eps:
            touchdown_time = t
            touchdown_points = _touchdown_points(field, p.eps)
            logger.info(f"Touchdown at t={t:.6g}, x={touchdown_points}")

        steady = rate < config.steady_tol
        if steady or steps % config.record_every == 0 or t >= config.t_end:
            record()
        if steady:
            logger.info(f"Steady state after {steps} steps at t={t:.6g}")
            break
        logger.log(TRACE, f"t={t:.6g} dt={result.dt:.3e} E={e_now:.12g} rate={rate:.3e}")
        dt = min(result.dt * config.grow, config.dt_max)
    else:
        logger.info(f"Stopped at t={t:.6g} after {steps} steps without reaching steady state")

    return Trajectory(
        times, snaps, energies, lefts, rights, touchdown_time, touchdown_points,
        steady, steps, max_rise, step_sizes, snapshot_steps)


def lower_bound(u0: Field, p: ModelParams) -> float:
    """The pointwise lower bound min(inf u₀, −1 + ε) of Laplacian solutions."""
    return min(u0.min(), 0.0, -1.0 + p.eps)


def _comparison_start(u0: Field, p: ModelParams) -> tuple[float, float]:
    if p.order != Order.SECOND:
        raise ValidationError("comparison bounds hold for the Laplacian flow only")
    start_low = min(u0.min(), 0.0)
    start_high = max(float(np.max(u0.values)), 0.0)
    if start_low <= -1.0:
        raise GapClosedError(f"inf u0 = {start_low} is at or below -1")
    return start_low, start_high


def comparison_tolerance(bound: npt.ArrayLike) -> FloatArray:
    """Accuracy rtol·|bound| + atol to which a comparison bound is known."""
    return COMPARISON_RTOL * np.abs(np.asarray(bound, dtype=float)) + COMPARISON_ATOL


def _uniform_solution(start: float, p: ModelParams, t_eval: FloatArray) -> FloatArray:
    # without regularization the uniform state quenches in finite time; from then on it is -1
    def rhs(_t: float, y: FloatArray) -> FloatArray:
        return -np.asarray(force(y, p))

    def jac(_t: float, y: FloatArray) -> FloatArray:
        return np.diag(-np.asarray(force_derivative(y, p)))

    def quench(_t: float, y: FloatArray) -> float:
        return float(y[0] + 1.0 - QUENCH_GAP)

    quench.terminal = True  # type: ignore[attr-defined]
    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), [start], method="Radau", jac=jac,
                    t_eval=t_eval, events=quench, rtol=COMPARISON_RTOL, atol=COMPARISON_ATOL)
    if not sol.success:
        raise StepFailure(f"comparison ODE failed: {sol.message}")
    values = np.full(t_eval.shape, -1.0)
    values[:sol.y.shape[1]] = sol.y[0]
    return values


def comparison_series(u0: Field, p: ModelParams,
                      times: Sequence[float]) -> tuple[FloatArray, FloatArray]:
    """
    Comparison bounds u₋(t) ≤ u(x, t) ≤ u₊(t) of the Laplacian flow at many times.

    Both bounds solve du/dt = −φ′(u), started from the infimum and supremum of the
    initial data (boundary zeros included). The upper bound is capped below by
    the boundary datum 0, which is itself a supersolution.

    :param u0: Initial deflection.
    :param p: Model parameters, second order only.
    :param times: Non-negative, increasing evaluation times.
    :raises ValidationError: For fourth-order parameters.
    :raises GapClosedError: If inf u₀ ≤ −1.
    :return: Arrays (u_minus, u_plus) at ``times``.
    """
    start_low, start_high = _comparison_start(u0, p)
    t_eval = np.asarray(times, dtype=float)
    if p.lam == 0 or t_eval.size == 0 or t_eval[-1] == 0:
        return np.full(t_eval.shape, start_low), np.full(t_eval.shape, start_high)

    low = _uniform_solution(start_low, p, t_eval)
    high = _uniform_solution(start_high, p, t_eval)
    return low, np.maximum(high, 0.0)


def stepped_comparison_series(u0: Field, p: ModelParams, traj: Trajectory,
                              scheme: Scheme) -> tuple[FloatArray, FloatArray]:
    """
    Comparison bounds advanced with the steps ``traj`` accepted, at its snapshots.

    The spatially uniform data are stepped by ``scheme`` with the accepted step
    sizes, so the bounds carry the same time discretisation as the trajectory.
    With ε > 0 the lower bound is kept at or above min(inf u₀, −1 + ε), a
    stationary subsolution, and the upper bound at or above the boundary datum 0.
    Without regularization a bound that steps to within QUENCH_GAP of −1 stays at −1.
    As dt → 0 both bounds tend to :func:`comparison_series`.

    :param u0: Initial deflection of ``traj``.
    :param p: Model parameters, second order only.
    :param traj: A trajectory started from ``u0``.
    :param scheme: The scheme ``traj`` was computed with.
    :raises ValidationError: For fourth-order parameters.
    :raises GapClosedError: If inf u₀ ≤ −1.
    :return: Arrays (u_minus, u_plus) at the snapshots of ``traj``.
    """
    start_low, start_high = _comparison_start(u0, p)
    floor = lower_bound(u0, p) if p.eps > 0 else -math.inf
    y = np.array([start_low, start_high])
    lows: list[float] = []
    highs: list[float] = []
    wanted = iter(traj.snapshot_steps)
    target = next(wanted, None)
    for n in range(len(traj.step_sizes) + 1):
        while target == n:
            lows.append(float(y[0]))
            highs.append(max(float(y[1]), 0.0))
            target = next(wanted, None)
        if n == len(traj.step_sizes):
            break
        dt = traj.step_sizes[n]
        live = y > -1.0 + QUENCH_GAP
        drift = dt * np.asarray(force(y[live], p))
        if scheme == Scheme.LINEARIZED:
            shift = 1.0 + dt * np.asarray(force_derivative(y[live], p))
            # the scalar linearization is singular where the shift is not positive
            drift = np.where(shift > 0, drift / np.where(shift > 0, shift, 1.0), drift)
        y[live] = np.maximum(y[live] - drift, -1.0)
        y[~live] = -1.0
        y[0] = max(y[0], floor)
        y[1] = max(y[1], 0.0)
    return np.asarray(lows), np.asarray(highs)


def comparison_bounds(u0: Field, p: ModelParams, t: float) -> tuple[float, float]:
    """Comparison bounds (u₋(t), u₊(t)) at a single time; see :func:`comparison_series`."""
    low, high = comparison_series(u0, p, [0.0, t] if t > 0 else [0.0])
    return float(low[-1]), float(high[-1])
