import math

import numpy as np
import pytest

from mems_touchdown.numerics import (
    ExpansionCoeffsL,
    Order,
    ValidationError,
    first_integral_residual,
    inner_bilaplacian_shoot,
    inner_laplacian,
)
from mems_touchdown.numerics.inner import (
    lambda0c_bilaplacian,
    log_coefficient,
    slope_at_infinity,
)


def test_far_field_constants() -> None:
    assert slope_at_infinity(10.0, 4) == pytest.approx(math.sqrt(40 / 3))
    assert log_coefficient(4) == 0.75
    assert log_coefficient(3) == 1.0
    assert lambda0c_bilaplacian(4) == 27.0
    assert ExpansionCoeffsL(10.0, 4, 0.0).lambda0c == 0.75


@pytest.mark.parametrize("lam, m, xi_max", [(0.0, 4, 50.0), (10.0, 2, 50.0), (10.0, 4, 10.0)])
def test_invalid_inner_arguments(lam: float, m: int, xi_max: float) -> None:
    with pytest.raises(ValidationError):
        inner_laplacian(lam, m, xi_max)
    with pytest.raises(ValidationError):
        inner_bilaplacian_shoot(lam, m, xi_max)


def test_laplacian_profile() -> None:
    profile = inner_laplacian(10.0, 4)
    assert profile.order == Order.SECOND
    assert profile.gamma is not None
    assert np.all(profile.v > 0)
    # flat at the fixed point on the left
    assert profile.v[0] == pytest.approx(1.0, abs=1e-8)
    assert abs(profile.states[0, 1]) < 1e-8
    assert np.all(np.diff(profile.v) >= -1e-12)

    s_inf = slope_at_infinity(10.0, 4)
    slope = profile.states[-1, 1]
    assert slope == pytest.approx(s_inf - log_coefficient(4) / profile.xi_max, rel=1e-3)
    assert first_integral_residual(profile) < 1e-8


def test_laplacian_left_half_follows_the_equation() -> None:
    lam, m = 10.0, 4
    profile = inner_laplacian(lam, m)
    left = profile.xi <= 0
    xi, v, slope = profile.xi[left], profile.v[left], profile.states[left, 1]

    potential = lam * (-1 / v + 1 / ((m - 1) * v ** (m - 1))) + lam * (m - 2) / (m - 1)
    assert np.max(np.abs(0.5 * slope**2 - potential)) < 1e-8
    # v′ agrees with the derivative of the sampled v
    np.testing.assert_allclose(slope[1:-1], np.gradient(v, xi)[1:-1], atol=1e-2)

    broken = profile.states.copy()
    broken[left, 1] *= 1 + 1e-6
    assert first_integral_residual(profile._replace(states=broken)) > 1e-8


def test_laplacian_gamma_is_reproducible() -> None:
    gammas = [inner_laplacian(10.0, 4, xi_max).gamma for xi_max in (50.0, 100.0)]
    assert gammas[0] is not None and gammas[1] is not None
    assert gammas[0] == pytest.approx(gammas[1], abs=1e-6)


def test_laplacian_profile_evaluation() -> None:
    profile = inner_laplacian(10.0, 4)
    assert np.all(profile.evaluate([-80.0, -60.0]) == 1.0)
    inside = profile.evaluate(profile.xi[::40])
    np.testing.assert_allclose(inside, profile.v[::40], rtol=1e-12)
    far = np.array([60.0, 100.0])
    np.testing.assert_array_equal(profile.evaluate(far), profile.far_field(far))
    # the far field approaches the profile at the edge of the sampled range
    edge = float(profile.far_field(profile.xi_max))
    assert edge == pytest.approx(profile.v[-1], rel=1e-2)


@pytest.mark.slow
def test_bilaplacian_profile() -> None:
    profile = inner_bilaplacian_shoot(50.0, 4)
    assert profile.order == Order.FOURTH
    assert profile.xi0 == pytest.approx(-3.77, abs=0.05)
    assert profile.b0 == pytest.approx(math.sqrt(50.0 / 3))

    v = profile.v
    centre = int(np.argmin(np.abs(profile.xi)))
    assert 0 < v.min() < 1
    assert abs(int(np.argmin(v)) - centre) <= 1
    assert abs(profile.states[centre, 1]) < 1e-6
    assert first_integral_residual(profile) < 1e-8

    tail = profile.xi >= profile.xi_max / 2
    gap = np.abs(v[tail] - profile.far_field(profile.xi[tail]))
    assert np.max(gap / v[tail]) < 1e-4


@pytest.mark.slow
def test_translation_constant_independent_of_lambda() -> None:
    xi0s = [inner_bilaplacian_shoot(lam, 4).xi0 for lam in (30.0, 80.0)]
    assert xi0s[0] is not None and xi0s[1] is not None
    assert xi0s[0] == pytest.approx(xi0s[1], abs=0.05)
