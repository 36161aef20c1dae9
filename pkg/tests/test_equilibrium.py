import numpy as np
import pytest

from mems_touchdown.branch_run import ROUTE_TOLERANCE, route_mismatch
from mems_touchdown.numerics import (
    BracketFailure,
    Branch,
    BranchPoint,
    ContinuationConfig,
    Field,
    FoldSet,
    Grid,
    ModelParams,
    Order,
    Stability,
    ValidationError,
    find_eps_c,
    find_folds,
    fold_points_from_curve,
    fold_scaling,
    fold_scaling_fit,
    folds_at,
    gap_for_lambda,
    has_two_folds,
    l0,
    l_eps,
    length_curve,
    locate_contact_point,
    solve_at_lambda,
    solve_at_norm,
    trace_branch,
    trajectory_norm_sq,
)
from mems_touchdown.numerics.equilibrium import max_norm_sq, scaled_residual

COARSE = ContinuationConfig(n=255, gap_floor=0.1)


@pytest.fixture(scope="module")
def unregularized_branch() -> Branch:
    return trace_branch(0.0, 4, Order.SECOND, config=COARSE)


@pytest.fixture(scope="module")
def bistable_branch() -> Branch:
    return trace_branch(0.025, 4, Order.SECOND, config=ContinuationConfig(stability=True))


@pytest.fixture(scope="module")
def small_eps_branch() -> Branch:
    return trace_branch(0.01, 4, Order.SECOND, s_max=1.85)


def test_zero_norm_gives_trivial_solution() -> None:
    grid = Grid.uniform(63)
    init = BranchPoint(0.3, 0.1, Field.zeros(grid))
    point = solve_at_norm(0.1, 4, Order.SECOND, 0.0, init)
    assert point.lam == 0.0
    np.testing.assert_array_equal(point.field.values, 0.0)


def test_unregularized_branch_has_single_fold(unregularized_branch: Branch) -> None:
    lams = unregularized_branch.lambdas()
    norms = unregularized_branch.norms()
    assert np.all(np.diff(norms) > 0)
    assert np.all(np.diff(lams[:5]) > 0)
    folds = find_folds(unregularized_branch)
    assert folds.lambda_c1 == pytest.approx(0.35, abs=0.005)
    assert folds.lambda_c2 is None
    assert not folds.bistable


def test_branch_points_are_symmetric_equilibria(unregularized_branch: Branch) -> None:
    for point in unregularized_branch.points[1::10]:
        p = unregularized_branch.params(point.lam)
        assert scaled_residual(point.field, p) < 10 * COARSE.newton_tol
        assert point.field.asymmetry() < 1e-8


def test_branch_matches_phase_plane(unregularized_branch: Branch) -> None:
    for point in unregularized_branch.points[5::10]:
        assert l0(point.alpha) ** 2 == pytest.approx(point.lam, rel=5e-3)


def test_bistable_branch(bistable_branch: Branch) -> None:
    folds = find_folds(bistable_branch)
    assert folds.bistable
    assert folds.lambda_c2 is not None and folds.lambda_c1 is not None
    assert 0 < folds.lambda_c2 < folds.lambda_c1
    assert folds.s_c1 is not None and folds.s_c2 is not None
    assert folds.s_c1 < folds.s_c2

    for point in bistable_branch.points[5::20]:
        if point.alpha < 2 * 0.025:
            continue
        assert l_eps(point.alpha, 0.025, 4) ** 2 == pytest.approx(point.lam, rel=5e-3)

    def stability_at(s: float) -> Stability:
        norms = bistable_branch.norms()
        return bistable_branch.points[int(np.argmin(np.abs(norms - s)))].stability

    assert stability_at(0.5 * folds.s_c1) == Stability.STABLE
    assert stability_at(0.5 * (folds.s_c1 + folds.s_c2)) == Stability.UNSTABLE
    s_top = bistable_branch.norms()[-1]
    assert stability_at(0.5 * (folds.s_c2 + s_top)) == Stability.STABLE


def test_large_norm_points_match_phase_plane(small_eps_branch: Branch) -> None:
    eps = 0.01
    folds = find_folds(small_eps_branch)
    assert folds.s_c1 is not None and folds.s_c2 is not None
    curve = length_curve(eps, 4)
    assert curve.alpha_min is not None

    past_fold = [pt for pt in small_eps_branch.points if pt.norm_sq > folds.s_c1]
    near_obstacle = [pt for pt in past_fold if pt.alpha < 2 * eps]
    checked = 0
    for point in near_obstacle[::5]:
        upper = point.alpha < curve.alpha_min
        try:
            alpha = gap_for_lambda(point.lam, curve, upper)
        except BracketFailure:
            continue
        expected = trajectory_norm_sq(alpha, eps, 4)
        assert point.norm_sq == pytest.approx(expected, rel=5e-3)
        checked += 1
    assert checked >= 10
    # both the intermediate and the large-norm piece are represented
    assert any(pt.norm_sq < folds.s_c2 for pt in near_obstacle)
    assert any(pt.norm_sq > folds.s_c2 for pt in near_obstacle)

    start = len(small_eps_branch.points) - len(past_fold)
    assert route_mismatch(small_eps_branch, start) < ROUTE_TOLERANCE


def test_monotone_branch_above_eps_c() -> None:
    folds = folds_at(0.45, 4, Order.SECOND)
    assert folds == FoldSet(None, None, 0.45)
    assert not folds.bistable


def test_fold_detection_needs_points() -> None:
    grid = Grid.uniform(31)
    branch = Branch([BranchPoint(0.0, 0.0, Field.zeros(grid))], 0.1, 4, Order.SECOND)
    with pytest.raises(ValidationError):
        find_folds(branch)


def test_synthetic_folds_are_refined() -> None:
    grid = Grid.uniform(31)
    s = np.linspace(0.0, 2.0, 81)
    # λ(s) with a maximum at s = 0.5 and a minimum at s = 1.5
    lam = 1.0 + np.sin(np.pi * s)
    points = [BranchPoint(float(lv), float(sv), Field.zeros(grid)) for sv, lv in zip(s, lam)]
    folds = find_folds(Branch(points, 0.1, 4, Order.SECOND))
    assert folds.lambda_c1 == pytest.approx(2.0, abs=1e-4)
    assert folds.lambda_c2 == pytest.approx(0.0, abs=1e-4)
    assert folds.s_c1 == pytest.approx(0.5, abs=1e-3)
    assert folds.s_c2 == pytest.approx(1.5, abs=1e-3)


def test_invalid_continuation_settings() -> None:
    with pytest.raises(ValidationError):
        trace_branch(0.1, 4, Order.SECOND, ds0=0.0, config=COARSE)
    with pytest.raises(ValidationError):
        trace_branch(0.1, 4, Order.SECOND, s_max=max_norm_sq(0.1), config=COARSE)


def test_fold_scaling_fit_recovers_power_law() -> None:
    eps = np.array([0.005, 0.01, 0.02, 0.04])
    table = [(float(e), 3.0 * float(e) ** 1.5) for e in eps]
    slope, intercept = fold_scaling_fit(table)
    assert slope == pytest.approx(1.5)
    assert intercept == pytest.approx(np.log(3.0))
    with pytest.raises(ValidationError):
        fold_scaling_fit(table[:1])


def test_solve_at_lambda_polishes_branch_point(bistable_branch: Branch) -> None:
    folds = find_folds(bistable_branch)
    assert folds.s_c1 is not None
    # well inside the minimal branch, away from the singular Jacobian at the fold
    i = int(np.argmin(np.abs(bistable_branch.norms() - 0.5 * folds.s_c1)))
    point = bistable_branch.points[i]
    p = bistable_branch.params(point.lam)
    perturbed = Field(point.field.grid, point.field.values * (1 + 1e-4))
    polished = solve_at_lambda(p, perturbed)
    np.testing.assert_allclose(polished.field.values, point.field.values, atol=1e-6)


def test_contact_point_on_fourth_order_profile() -> None:
    grid = Grid.uniform(401)
    x = grid.nodes
    values = -((1 - x**2) ** 2) * np.exp(-((np.abs(x) - 0.8) ** 2) / 0.01)
    field = Field(grid, values)
    expected = x[x > 0][int(np.argmin(values[x > 0]))]
    assert locate_contact_point(field, Order.FOURTH) == pytest.approx(expected, abs=grid.h)


@pytest.mark.slow
def test_principal_fold_at_small_eps() -> None:
    folds = folds_at(0.01, 4, Order.SECOND)
    assert folds.lambda_c1 == pytest.approx(0.350004 + 0.794451 * 0.01**2, rel=1e-3)



@pytest.mark.slow
@pytest.mark.parametrize("eps", [0.01, 0.05, 0.10])
def test_folds_agree_between_routes(eps: float) -> None:
    folds = folds_at(eps, 4, Order.SECOND)
    lambda_c1, lambda_c2 = fold_points_from_curve(length_curve(eps, 4))
    assert folds.lambda_c1 == pytest.approx(lambda_c1, rel=1e-3)
    assert folds.lambda_c2 == pytest.approx(lambda_c2, rel=1e-3)

@pytest.mark.slow
def test_second_fold_increases_with_eps() -> None:
    table = fold_scaling(Order.SECOND, 4, [0.01, 0.025, 0.05])
    assert np.all(np.diff([lam for _, lam in table]) > 0)


@pytest.mark.slow
@pytest.mark.parametrize("order", [Order.SECOND, Order.FOURTH])
def test_critical_regularization(order: Order) -> None:
    eps_c = find_eps_c(4, order)
    # every ε up to 0.15 is still bistable
    assert 0.15 < eps_c < 0.5
    assert has_two_folds(0.9 * eps_c, 4, order)
    assert not has_two_folds(1.1 * eps_c, 4, order)


@pytest.mark.slow
@pytest.mark.parametrize("order, expected", [(Order.SECOND, 1.0), (Order.FOURTH, 1.5)])
def test_second_fold_scaling(order: Order, expected: float) -> None:
    table = fold_scaling(order, 4, [0.005, 0.01, 0.02, 0.04])
    slope, _ = fold_scaling_fit(table)
    assert slope == pytest.approx(expected, abs=0.1)


def test_model_params_of_branch(bistable_branch: Branch) -> None:
    assert bistable_branch.params(2.0) == ModelParams(2.0, 0.025, 4, Order.SECOND)
