"""
Equilibria of the regularized problems by continuation in the squared norm.

Steady states solve A u + λ f(u) = 0, where A is the stiffness operator of the
chosen order and f is the force at λ = 1. Branches are parametrised by
s = ‖u‖₂², which keeps λ(s) single valued through both folds, and λ is solved
for alongside u by a bordered Newton iteration.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.linalg import eigvals_banded, solve_banded
from scipy.sparse.linalg import spsolve

from .discretization import (
    Field,
    Grid,
    LinearOperator,
    build_operator,
    default_grid_size,
    norm_sq,
    second_derivative,
)
from .model import force, force_derivative
from .utils import (
    TRACE,
    BracketFailure,
    ModelParams,
    NoConvergence,
    Order,
    ValidationError,
)

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


class Stability(Enum):
    """Sign of the smallest eigenvalue of the linearization."""

    UNKNOWN = "unknown"
    STABLE = "stable"
    UNSTABLE = "unstable"


class BranchPoint(NamedTuple):
    """
    An equilibrium on a solution branch.

    :param lam: The voltage parameter λ.
    :param norm_sq: ‖u‖₂² of the field.
    :param field: The equilibrium deflection.
    :param stability: Stability hint, only filled in on request.
    """

    lam: float
    norm_sq: float
    field: Field
    stability: Stability = Stability.UNKNOWN

    @property
    def min_u(self) -> float:
        """Smallest deflection."""
        return self.field.min()

    @property
    def alpha(self) -> float:
        """Smallest gap 1 + min u."""
        return 1.0 + self.field.min()


class Branch(NamedTuple):
    """
    A traced branch, ordered by increasing norm.

    :param points: The branch points, starting at the trivial solution.
    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param order: The operator order.
    """

    points: list[BranchPoint]
    eps: float
    m: int
    order: Order

    def lambdas(self) -> FloatArray:
        """λ at every point."""
        return np.array([pt.lam for pt in self.points])

    def norms(self) -> FloatArray:
        """‖u‖₂² at every point."""
        return np.array([pt.norm_sq for pt in self.points])

    def min_us(self) -> FloatArray:
        """min u at every point."""
        return np.array([pt.min_u for pt in self.points])

    def params(self, lam: float = 1.0) -> ModelParams:
        """Model parameters of the branch at a given λ."""
        return ModelParams(lam, self.eps, self.m, self.order)


class FoldSet(NamedTuple):
    """
    Fold points of a branch.

    :param lambda_c1: The principal fold, a local maximum of λ(s).
    :param lambda_c2: The second fold, a local minimum of λ(s) after the first.
    :param eps: The regularization parameter of the branch.
    :param s_c1: Norm at the principal fold.
    :param s_c2: Norm at the second fold.
    """

    lambda_c1: float | None
    lambda_c2: float | None
    eps: float
    s_c1: float | None = None
    s_c2: float | None = None

    @property
    def bistable(self) -> bool:
        """True when both folds exist."""
        return self.lambda_c1 is not None and self.lambda_c2 is not None


class ContinuationConfig(NamedTuple):
    """
    Settings of the norm continuation.

    :param n: Interior node count, defaults to :func:`default_grid_size`.
    :param ds0: Initial and largest norm step.
    :param ds_min: Smallest norm step before giving up.
    :param newton_tol: Tolerance on the scaled Newton residual.
    :param max_iter: Newton iterations per point.
    :param gap_floor: For ε = 0, stop once 1 + min u falls below this.
    :param grow_after: Successful steps before the norm step grows.
    :param grow: Growth factor of the norm step.
    :param max_points: Hard limit on the branch length.
    :param stability: Compute stability hints for every point.
    """

    n: int | None = None
    ds0: float = 0.01
    ds_min: float = 1e-8
    newton_tol: float = 1e-10
    max_iter: int = 50
    gap_floor: float = 0.02
    grow_after: int = 3
    grow: float = 1.3
    max_points: int = 20_000
    stability: bool = False

    def grid(self, eps: float, order: Order) -> Grid:
        """The continuation grid for the given ε and order."""
        return Grid.uniform(self.n if self.n is not None else default_grid_size(eps, order))


def max_norm_sq(eps: float) -> float:
    """Norm of the flat state u ≡ −1 + ε, approached by the upper branch as λ → ∞."""
    return 2.0 * (1.0 - eps) ** 2


def residual(field: Field, p: ModelParams,
             operator: LinearOperator | None = None) -> FloatArray:
    """Discrete equilibrium residual A u + force(u)."""
    op = operator or build_operator(field.grid, p.order)
    return op.stiffness(field.values) + np.asarray(force(field.values, p))


def scaled_residual(field: Field, p: ModelParams,
                    operator: LinearOperator | None = None) -> float:
    """
    ‖A u + force(u)‖_∞ relative to the size of its two terms.

    The entries of A grow like h⁻² or h⁻⁴, so the unscaled residual of a converged
    solution is limited by roundoff at the level ‖A‖·‖u‖·machine epsilon.
    """
    op = operator or build_operator(field.grid, p.order)
    f = np.asarray(force(field.values, p))
    res = op.stiffness(field.values) + f
    size = op.norm_inf * float(np.max(np.abs(field.values))) + float(np.max(np.abs(f)))
    scale = max(1.0, size)
    return float(np.max(np.abs(res))) / scale


def _damped(values: FloatArray, delta: FloatArray, floor: float) -> FloatArray:
    theta = 1.0
    while theta > 1e-10:
        trial = values + theta * delta
        if np.all(trial > -1.0 + floor):
            return trial
        theta /= 2
    raise NoConvergence("Newton update cannot be damped to keep the gap open")


def solve_at_norm(eps: float, m: int, order: Order, s_target: float, init: BranchPoint,
                  config: ContinuationConfig | None = None,
                  operator: LinearOperator | None = None) -> BranchPoint:
    """
    Solve A u + λ f(u) = 0 with h·Σu² = s_target for the pair (u, λ).

    Newton's method on the bordered system
    [[A + λ diag f′(u), f(u)], [2h uᵀ, 0]]; the full bordered matrix is factorised
    with a sparse LU because A + λ diag f′(u) itself is singular at folds.

    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param order: The operator order.
    :param s_target: The squared norm to reach.
    :param init: The starting guess, usually a predicted point.
    :param config: Continuation settings.
    :param operator: A prebuilt stiffness operator on the grid of ``init``.
    :raises NoConvergence: If the scaled residual does not drop below newton_tol.
    :return: The converged branch point.
    """
    config = config or ContinuationConfig()
    grid = init.field.grid
    if s_target == 0:
        return BranchPoint(0.0, 0.0, Field.zeros(grid))
    unit = ModelParams(1.0, eps, m, order)
    op = operator or build_operator(grid, order)
    h = grid.h
    u = init.field.values.copy()
    lam = init.lam
    # keep iterates clear of the force singularity
    floor = 0.5 * eps if eps > 0 else 1e-12

    for iteration in range(config.max_iter + 1):
        f = np.asarray(force(u, unit))
        res = op.stiffness(u) + lam * f
        constraint = h * float(u @ u) - s_target
        size = op.norm_inf * float(np.max(np.abs(u))) + lam * float(np.max(np.abs(f)))
        err = float(np.max(np.abs(res))) / max(1.0, size)
        logger.log(TRACE, f"s={s_target:.6g} it={iteration} lambda={lam:.12g} res={err:.3e}")
        on_norm = abs(constraint) < config.newton_tol * max(1.0, s_target)
        if err < config.newton_tol and on_norm:
            return BranchPoint(lam, h * float(u @ u), Field(grid, u))
        if iteration == config.max_iter:
            break
        jac = op.jacobian(lam * np.asarray(force_derivative(u, unit)))
        bordered = sp.bmat([
            [jac, sp.csc_matrix(f[:, None])],
            [sp.csr_matrix(2.0 * h * u[None, :]), None],
        ], format="csc")
        delta = spsolve(bordered, -np.concatenate((res, [constraint])))
        if not np.all(np.isfinite(delta)):
            break
        u = _damped(u, delta[:-1], floor)
        lam += float(delta[-1])

    raise NoConvergence(
        f"Newton failed at s={s_target:.6g} (eps={eps:g}, m={m}, order={int(order)}) "
        f"after {config.max_iter} iterations")


def _first_guess(eps: float, m: int, order: Order, s: float,
                 op: LinearOperator) -> BranchPoint:
    # small-λ solutions are λ·w with A w = −f(0)
    grid = op.grid
    f0 = float(force(0.0, ModelParams(1.0, eps, m, order)))
    w = op.solve(-f0 * np.ones(grid.n))
    lam = math.sqrt(s / (grid.h * float(w @ w)))
    return BranchPoint(lam, s, Field(grid, lam * w))


def _predict(prev: BranchPoint, last: BranchPoint, s: float, eps: float) -> BranchPoint:
    t = (s - last.norm_sq) / (last.norm_sq - prev.norm_sq)
    values = last.field.values + t * (last.field.values - prev.field.values)
    floor = -1.0 + (0.5 * eps if eps > 0 else 1e-3)
    values = np.maximum(values, floor)
    lam = last.lam + t * (last.lam - prev.lam)
    return BranchPoint(lam, s, Field(last.field.grid, values))


def trace_branch(eps: float, m: int, order: Order, s_max: float | None = None,
                 ds0: float | None = None, config: ContinuationConfig | None = None,
                 stop_when: Callable[[Sequence[BranchPoint]], bool] | None = None,
                 operator: LinearOperator | None = None) -> Branch:
    """
    March s = ‖u‖₂² from 0 to ``s_max``, solving for (u, λ) at every step.

    The step ds halves after a failed solve and grows by ``grow`` after
    ``grow_after`` consecutive successes, never exceeding ds0. Previously accepted
    solutions initialise the next solve by secant extrapolation.

    :param eps: The regularization parameter.
    :param m: The regularization exponent.
    :param order: The operator order.
    :param s_max: Final norm, defaults to 0.98 of the flat-state norm 2(1 − ε)².
    :param ds0: Initial norm step, overriding the config.
    :param config: Continuation settings.
    :param stop_when: Called with the accepted points after every step; a true
        result ends the trace early.
    :param operator: A prebuilt stiffness operator.
    :raises NoConvergence: If ds underflows ds_min.
    :return: The branch.
    """
    config = config or ContinuationConfig()
    if ds0 is not None:
        config = config._replace(ds0=ds0)
    if not config.ds0 > 0:
        raise ValidationError(f"ds0 must be positive, got {config.ds0}")
    ModelParams(1.0, eps, m, order).validate()
    if s_max is None:
        s_max = 0.98 * max_norm_sq(eps)
    if not 0 < s_max < max_norm_sq(eps):
        raise ValidationError(f"s_max must lie in (0, {max_norm_sq(eps):.6g}), got {s_max}")

    grid = operator.grid if operator is not None else config.grid(eps, order)
    op = operator or build_operator(grid, order)
    points = [BranchPoint(0.0, 0.0, Field.zeros(grid))]
    ds = config.ds0
    streak = 0
    reason = "s_max"
    logger.debug(f"Tracing branch eps={eps:g} m={m} order={int(order)} on {grid}")

    while points[-1].norm_sq < s_max and len(points) < config.max_points:
        s = min(points[-1].norm_sq + ds, s_max)
        if len(points) == 1:
            guess = _first_guess(eps, m, order, s, op)
        else:
            guess = _predict(points[-2], points[-1], s, eps)
        try:
            point = solve_at_norm(eps, m, order, s, guess, config, op)
        except NoConvergence as e:
            ds /= 2
            streak = 0
            logger.log(TRACE, f"{e}; ds -> {ds:.3e}")
            if ds < config.ds_min:
                raise NoConvergence(
                    f"continuation step underflow at s={points[-1].norm_sq:.6g}, "
                    f"lambda={points[-1].lam:.6g}") from e
            continue
        if config.stability:
            point = point._replace(stability=stability_hint(point, ModelParams(
                point.lam, eps, m, order), op))
        points.append(point)
        streak += 1
        if streak >= config.grow_after:
            ds = min(ds * config.grow, config.ds0)
            streak = 0
        if eps == 0 and point.alpha < config.gap_floor:
            reason = "gap floor"
            break
        if stop_when is not None and stop_when(points):
            reason = "stop condition"
            break

    logger.info(
        f"Traced {len(points)} points up to s={points[-1].norm_sq:.6g}, "
        f"lambda={points[-1].lam:.6g} ({reason})")
    return Branch(points, eps, m, order)


def past_bistable_window(points: Sequence[BranchPoint], margin: float = 1.1) -> bool:
    """
    Stop condition for fold searches.

    True once λ(s) has passed a local maximum and has since climbed above
    ``margin`` times that maximum, so both folds lie behind the trace.
    """
    if len(points) < 3:
        return False
    lams = [pt.lam for pt in points]
    peak = None
    for i in range(1, len(lams) - 1):
        if lams[i] > lams[i - 1] and lams[i] > lams[i + 1]:
            peak = lams[i]
            break
    return peak is not None and lams[-1] > margin * peak


def _vertex(s: FloatArray, lam: FloatArray, i: int) -> tuple[float, float]:
    a, b, c = np.polyfit(s[i - 1:i + 2], lam[i - 1:i + 2], 2)
    if a == 0:
        return float(s[i]), float(lam[i])
    s_v = -b / (2 * a)
    if not s[i - 1] <= s_v <= s[i + 1]:
        return float(s[i]), float(lam[i])
    return float(s_v), float(c - b * b / (4 * a))


def find_folds(branch: Branch, prominence: float = 1e-10) -> FoldSet:
    """
    Locate the folds of λ(s) along a branch.

    The principal fold is the first interior local maximum; the second fold is
    the smallest interior local minimum after it. Each is refined by the vertex of
    a parabola through the discrete extremum and its neighbours.

    :param branch: A branch with at least three points.
    :param prominence: Relative height below which extrema are treated as noise.
    :raises ValidationError: If the branch is too short.
    :return: The folds, absent ones reported as None.
    """
    if len(branch.points) < 3:
        raise ValidationError("fold detection needs at least 3 branch points")
    s = branch.norms()
    lam = branch.lambdas()
    tol = prominence * max(1.0, float(np.max(np.abs(lam))))

    first_max = None
    for i in range(1, len(lam) - 1):
        if lam[i] - lam[i - 1] > tol and lam[i] - lam[i + 1] > -tol and lam[i] > lam[i + 1]:
            first_max = i
            break
    if first_max is None:
        return FoldSet(None, None, branch.eps)
    s_c1, lambda_c1 = _vertex(s, lam, first_max)

    minima = [
        i for i in range(first_max + 1, len(lam) - 1)
        if lam[i - 1] - lam[i] > tol and lam[i + 1] - lam[i] > tol
    ]
    if not minima:
        return FoldSet(lambda_c1, None, branch.eps, s_c1)
    lowest = min(minima, key=lambda i: lam[i])
    s_c2, lambda_c2 = _vertex(s, lam, lowest)
    return FoldSet(lambda_c1, lambda_c2, branch.eps, s_c1, s_c2)


def _fold_config(config: ContinuationConfig | None) -> ContinuationConfig:
    config = config or ContinuationConfig()
    return config._replace(ds0=min(config.ds0, 0.01))


def folds_at(eps: float, m: int, order: Order,
             config: ContinuationConfig | None = None) -> FoldSet:
    """Trace just far enough past the bistable window to find both folds."""
    branch = trace_branch(eps, m, order, 0.9 * max_norm_sq(eps), config=_fold_config(config),
                          stop_when=past_bistable_window)
    return find_folds(branch)


def has_two_folds(eps: float, m: int, order: Order,
                  config: ContinuationConfig | None = None) -> bool:
    """True when the branch at ``eps`` is bistable."""
    folds = folds_at(eps, m, order, config)
    logger.debug(f"eps={eps:.6g}: lambda_c1={folds.lambda_c1}, lambda_c2={folds.lambda_c2}")
    return folds.bistable


def find_eps_c(m: int, order: Order, config: ContinuationConfig | None = None,
               width: float = 1e-3, eps_low: float = 1e-3, eps_high: float = 0.5) -> float:
    """
    Critical regularization at which the two folds merge.

    Bisects on the predicate "the branch has two folds", which holds below ε_c
    and fails above it.

    :param m: The regularization exponent.
    :param order: The operator order.
    :param config: Continuation settings, the grid size is chosen per ε if unset.
    :param width: Final bracket width.
    :param eps_low: Smallest ε tried for a bistable branch.
    :param eps_high: An ε expected to have a monotone branch.
    :raises BracketFailure: If no sign change is found in (eps_low, eps_high).
    :return: The midpoint of the final bracket.
    """
    if has_two_folds(eps_high, m, order, config):
        raise BracketFailure(f"branch at eps={eps_high} still has two folds")
    high = eps_high
    low = high / 2
    while not has_two_folds(low, m, order, config):
        high = low
        low /= 2
        if low < eps_low:
            raise BracketFailure(
                f"no bistable branch found for eps in ({eps_low}, {eps_high})")
    while high - low >= width:
        mid = 0.5 * (low + high)
        if has_two_folds(mid, m, order, config):
            low = mid
        else:
            high = mid
        logger.info(f"eps_c bracket [{low:.6g}, {high:.6g}]")
    return 0.5 * (low + high)


def fold_scaling(order: Order, m: int, eps_list: Sequence[float],
                 config: ContinuationConfig | None = None) -> list[tuple[float, float]]:
    """
    Samples of the second fold λ_c^(2)(ε).

    :raises ValidationError: If some ε has no second fold.
    :return: (eps, lambda_c2) pairs in the order given.
    """
    table = []
    for eps in eps_list:
        folds = folds_at(eps, m, order, config)
        if folds.lambda_c2 is None:
            raise ValidationError(f"no second fold at eps={eps:g}; eps exceeds eps_c")
        table.append((float(eps), folds.lambda_c2))
    return table


def fold_scaling_fit(table: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares (slope, intercept) of log y against log ε for (ε, y) samples."""
    if len(table) < 2:
        raise ValidationError("a slope needs at least two samples")
    eps, lam = np.log(np.asarray(table, dtype=float)).T
    slope, intercept = np.polyfit(eps, lam, 1)
    return float(slope), float(intercept)


def solve_at_lambda(p: ModelParams, init: Field, config: ContinuationConfig | None = None,
                    operator: LinearOperator | None = None) -> BranchPoint:
    """
    Newton's method for A u + force(u) = 0 at fixed λ.

    Converges to whichever branch ``init`` is closest to; the Jacobian is
    solved as a band matrix and must be regular, so folds are to be avoided.

    :raises NoConvergence: If the scaled residual does not drop below newton_tol.
    """
    config = config or ContinuationConfig()
    op = operator or build_operator(init.grid, p.order)
    u = init.values.copy()
    floor = 0.5 * p.eps if p.eps > 0 else 1e-12
    for iteration in range(config.max_iter):
        field = Field(init.grid, u)
        err = scaled_residual(field, p, op)
        logger.log(TRACE, f"lambda={p.lam:g} it={iteration} res={err:.3e}")
        if err < config.newton_tol:
            return BranchPoint(p.lam, norm_sq(field), field)
        res = residual(field, p, op)
        bands = op.full_bands(np.asarray(force_derivative(u, p)))
        k = op.bandwidth
        try:
            delta = solve_banded((k, k), bands, -res, check_finite=False)
        except np.linalg.LinAlgError as e:
            raise NoConvergence(f"singular Jacobian at lambda={p.lam:g}") from e
        u = _damped(u, np.asarray(delta), floor)
    raise NoConvergence(
        f"Newton failed at lambda={p.lam:g} after {config.max_iter} iterations")


def upper_branch_point(p: ModelParams, config: ContinuationConfig | None = None,
                       s_max: float | None = None) -> BranchPoint:
    """
    Equilibrium at λ = p.lam on the large-norm branch.

    Traces until λ(s) first exceeds the target, then polishes a linear
    interpolation at fixed λ. λ must lie above the principal fold, otherwise
    the point found belongs to the minimal branch.

    :raises NoConvergence: If the branch never reaches the target λ.
    """
    p.validate()
    target = p.lam

    def reached(points: Sequence[BranchPoint]) -> bool:
        return points[-1].lam > target

    branch = trace_branch(p.eps, p.m, p.order, s_max, config=config, stop_when=reached)
    if len(branch.points) < 2 or branch.points[-1].lam <= target:
        raise NoConvergence(f"branch did not reach lambda={target:g}")
    a, b = branch.points[-2], branch.points[-1]
    w = (target - a.lam) / (b.lam - a.lam)
    guess = a.field.values + w * (b.field.values - a.field.values)
    op = build_operator(a.field.grid, p.order)
    return solve_at_lambda(p, Field(a.field.grid, guess), config, op)


def stability_hint(point: BranchPoint, p: ModelParams,
                   operator: LinearOperator | None = None) -> Stability:
    """
    Stability from the sign of the smallest eigenvalue of A + λ diag f′(u).

    :param point: The equilibrium.
    :param p: Model parameters at the point's λ.
    :param operator: A prebuilt stiffness operator.
    """
    op = operator or build_operator(point.field.grid, p.order)
    bands = op.upper.copy()
    bands[-1] += np.asarray(force_derivative(point.field.values, p.with_lambda(point.lam)))
    smallest = float(eigvals_banded(bands, lower=False, select="i", select_range=(0, 0))[0])
    logger.log(TRACE, f"lambda={point.lam:.6g}: smallest eigenvalue {smallest:.6g}")
    return Stability.STABLE if smallest > 0 else Stability.UNSTABLE


def _refine_extremum(x: FloatArray, y: FloatArray, i: int) -> float:
    if i == 0 or i == len(y) - 1:
        return float(x[i])
    a, b, _ = np.polyfit(x[i - 1:i + 2], y[i - 1:i + 2], 2)
    return float(-b / (2 * a)) if a != 0 else float(x[i])


def locate_contact_point(field: Field, order: Order) -> float:
    """
    Contact point x_c on the right half of a touchdown equilibrium.

    For the Laplacian this is the maximum of u″; for the bi-Laplacian the
    local minimum of u, where the inner coordinate vanishes. Both are refined
    by a parabola through the discrete extremum.
    """
    x = field.x
    right = x > 0
    if order == Order.SECOND:
        curvature = second_derivative(field)[right]
        return _refine_extremum(x[right], curvature, int(np.argmax(curvature)))
    values = field.values[right]
    return _refine_extremum(x[right], values, int(np.argmin(values)))
