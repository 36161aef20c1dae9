import math

import numpy as np
import pytest

from mems_touchdown.numerics import (
    ContinuationConfig,
    ExpansionCoeffsB,
    ExpansionCoeffsL,
    Grid,
    ModelParams,
    Order,
    ValidationError,
    composite_bilaplacian,
    composite_laplacian,
    contact_point_bilaplacian,
    contact_point_laplacian,
    fold_scaling_fit,
    inner_bilaplacian_shoot,
    inner_laplacian,
    locate_contact_point,
    norm_sq_bilaplacian,
    norm_sq_laplacian,
    polynomial_moments,
    upper_branch_point,
)
from mems_touchdown.numerics.asymptotics import outer_profile_b


def test_polynomial_moments() -> None:
    w0_sq, cross = polynomial_moments()
    assert w0_sq == pytest.approx(13 / 35, rel=1e-12)
    assert cross == pytest.approx(-11 / 210, rel=1e-12)


def test_laplacian_coefficients() -> None:
    coeffs = ExpansionCoeffsL(10.0, 4, gamma=0.3)
    assert coeffs.lambda0c == 0.75
    assert coeffs.lambda1c == -1.125
    assert coeffs.a_half == -0.75
    assert coeffs.a1 == pytest.approx(0.375 * math.log(0.075) - 0.3)
    assert coeffs.lambda2c == pytest.approx(1.5 * coeffs.a1)
    assert coeffs.xbar_c(0.01, terms=1) == pytest.approx(math.sqrt(0.075))
    with pytest.raises(ValidationError):
        coeffs.xbar_c(0.01, terms=4)


def test_laplacian_contact_point_leading_order() -> None:
    x_c = contact_point_laplacian(10.0, 0.01, 4, terms=1)
    assert x_c == pytest.approx(1 - 0.1 * math.sqrt(0.075))
    assert x_c == pytest.approx(0.9726, abs=1e-4)


def test_laplacian_norm_formula() -> None:
    assert norm_sq_laplacian(10.0, 0.01, 4) == pytest.approx(1.9235, abs=1e-4)
    assert norm_sq_laplacian(10.0, 1e-12, 4) == pytest.approx(2.0, abs=1e-5)


def test_bilaplacian_coefficients() -> None:
    coeffs = ExpansionCoeffsB(50.0, 4, xi0=-3.77)
    assert coeffs.lambda0c == 27.0
    assert coeffs.lambda1c == pytest.approx(-18 * -3.77)
    assert coeffs.lambda2c == pytest.approx(-4.5)
    assert coeffs.alpha1 == -0.25
    assert coeffs.alpha2 == 1.0
    assert coeffs.b0 == pytest.approx(3 * math.sqrt(50 / 27))
    assert coeffs.a1 == pytest.approx(-2 * (50 / 27) ** 0.75)
    assert coeffs.scale == pytest.approx((27 / 50) ** 0.25)
    assert coeffs.beta1 == pytest.approx(7 / 3 + 3.77**2 / 12)
    assert coeffs.rescaled_lambda(0.01, c1=0.0) != coeffs.rescaled_lambda(0.01)


def test_boundary_layer_corrections_are_clamped() -> None:
    coeffs = ExpansionCoeffsB(50.0, 4, xi0=-3.77)
    h = 1e-6
    assert float(coeffs.w_half(0.0)) == pytest.approx(coeffs.alpha1)
    slope = (float(coeffs.w_half(h)) - float(coeffs.w_half(-h))) / (2 * h)
    assert slope == pytest.approx(coeffs.alpha2, rel=1e-6)
    assert float(coeffs.w_half(1.0)) == pytest.approx(0.0, abs=1e-14)
    end_slope = (float(coeffs.w_half(1.0 + h)) - float(coeffs.w_half(1.0 - h))) / (2 * h)
    assert end_slope == pytest.approx(0.0, abs=1e-8)
    assert float(coeffs.w_one(1.0, c1=0.4)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("xi0", [0.0, -3.77])
def test_clamped_outer_profile(xi0: float) -> None:
    eps, h = 0.01, 1e-6
    assert float(outer_profile_b(0.0, xi0, eps)) == -1.0
    assert float(outer_profile_b(1.0, xi0, eps)) == pytest.approx(0.0, abs=1e-15)
    slope = (float(outer_profile_b(1 + h, xi0, eps))
             - float(outer_profile_b(1 - h, xi0, eps))) / (2 * h)
    assert slope == pytest.approx(0.0, abs=1e-8)


def test_bilaplacian_contact_point() -> None:
    leading = contact_point_bilaplacian(50.0, 0.005, 4, terms=1)
    assert leading == pytest.approx(1 - (54 / 100) ** 0.25 * 0.005**0.25)
    two_term = contact_point_bilaplacian(50.0, 0.005, 4, xi0=-3.77)
    # ξ₀ < 0 widens the boundary layer
    assert two_term < leading
    third = contact_point_bilaplacian(50.0, 0.005, 4, xi0=-3.77, third_order=True)
    assert third != two_term
    with pytest.raises(ValidationError):
        contact_point_bilaplacian(50.0, 0.005, 4, xi0=-3.77, terms=3)


def test_bilaplacian_norm_formula() -> None:
    eps = 0.005
    expected = 2 * (1 - 22 / 35 * (54 / 100) ** 0.25 * eps**0.25)
    assert norm_sq_bilaplacian(50.0, eps, 4) == pytest.approx(expected, rel=1e-12)
    assert norm_sq_bilaplacian(50.0, 1e-16, 4) == pytest.approx(2.0, abs=1e-3)


def test_laplacian_composite_shape() -> None:
    eps = 0.05
    grid = Grid.uniform(1023)
    composite = composite_laplacian(10.0, eps, 4, grid)
    x, u = grid.nodes, composite.values
    assert composite.asymmetry() < 1e-12
    assert u[grid.n // 2] == pytest.approx(-1 + eps, abs=1e-12)
    assert u.min() > -1
    # clamped at x = ±1 to within one grid step of the boundary slope
    x_c = contact_point_laplacian(10.0, eps, 4)
    assert abs(u[-1]) < 2 * grid.h / (1 - x_c)
    assert np.all(u[x > x_c + 0.1 * (1 - x_c)] < 0)


def test_composite_rejects_wrong_inputs() -> None:
    grid = Grid.uniform(63)
    with pytest.raises(ValidationError):
        composite_laplacian(10.0, 0.0, 4, grid)
    with pytest.raises(ValidationError):
        composite_bilaplacian(50.0, 0.01, 4, inner_laplacian(10.0, 4), grid)
    # a matching constant that pushes x_c out of (0, 1)
    profile = inner_laplacian(10.0, 4)._replace(gamma=-100.0)
    with pytest.raises(ValidationError):
        composite_laplacian(10.0, 0.5, 4, grid, profile)


@pytest.mark.slow
@pytest.mark.parametrize("lam", [5.0, 10.0, 20.0])
def test_laplacian_norm_matches_upper_branch(lam: float) -> None:
    eps = 0.01
    point = upper_branch_point(ModelParams(lam, eps, 4))
    assert norm_sq_laplacian(lam, eps, 4) == pytest.approx(point.norm_sq, rel=0.02)


@pytest.mark.slow
def test_laplacian_contact_point_three_terms_improve() -> None:
    eps = 0.02
    point = upper_branch_point(ModelParams(10.0, eps, 4))
    x_c = locate_contact_point(point.field, Order.SECOND)
    one = contact_point_laplacian(10.0, eps, 4, terms=1)
    three = contact_point_laplacian(10.0, eps, 4)
    assert abs(three - x_c) < abs(one - x_c)


@pytest.mark.slow
def test_laplacian_composite_matches_equilibrium() -> None:
    eps = 0.05
    point = upper_branch_point(ModelParams(10.0, eps, 4))
    composite = composite_laplacian(10.0, eps, 4, point.field.grid)
    assert np.max(np.abs(composite.values - point.field.values)) < 5 * eps


@pytest.mark.slow
@pytest.mark.parametrize("lam", [30.0, 50.0, 80.0])
def test_bilaplacian_norm_matches_upper_branch(lam: float) -> None:
    eps = 0.005
    point = upper_branch_point(ModelParams(lam, eps, 4, Order.FOURTH))
    assert norm_sq_bilaplacian(lam, eps, 4) == pytest.approx(point.norm_sq, rel=0.03)


@pytest.mark.slow
def test_bilaplacian_composite_matches_equilibrium() -> None:
    eps = 0.01
    p = ModelParams(50.0, eps, 4, Order.FOURTH)
    point = upper_branch_point(p, ContinuationConfig(n=1023))
    profile = inner_bilaplacian_shoot(50.0, 4)
    composite = composite_bilaplacian(50.0, eps, 4, profile, point.field.grid)
    assert np.max(np.abs(composite.values - point.field.values)) < 10 * eps
    x_c = locate_contact_point(point.field, Order.FOURTH)
    one = contact_point_bilaplacian(50.0, eps, 4, terms=1)
    two = contact_point_bilaplacian(50.0, eps, 4, xi0=profile.xi0)
    assert abs(two - x_c) < abs(one - x_c)


def _contact_gap(p: ModelParams) -> float:
    point = upper_branch_point(p)
    return 1.0 - locate_contact_point(point.field, p.order)


@pytest.mark.slow
def test_laplacian_contact_point_scales_as_sqrt_eps() -> None:
    table = [(eps, _contact_gap(ModelParams(10.0, eps, 4)))
             for eps in (0.001, 0.003, 0.01, 0.03)]
    slope, _ = fold_scaling_fit(table)
    assert slope == pytest.approx(0.5, abs=0.02)


@pytest.mark.slow
def test_bilaplacian_contact_point_scales_as_quarter_power() -> None:
    table = [(eps, _contact_gap(ModelParams(50.0, eps, 4, Order.FOURTH)))
             for eps in (0.0005, 0.001, 0.002, 0.004)]
    slope, _ = fold_scaling_fit(table)
    assert slope == pytest.approx(0.25, abs=0.02)
