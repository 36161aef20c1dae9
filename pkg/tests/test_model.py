import numpy as np
import pytest

from mems_touchdown.numerics import (
    Field,
    GapClosedError,
    Grid,
    ModelParams,
    Order,
    ValidationError,
    energy,
    force,
    force_derivative,
    potential_phi,
)


def test_force_vanishes_at_potential_minimum() -> None:
    for eps, m, lam in [(0.05, 4, 1.0), (0.01, 3, 7.5), (0.2, 6, 0.3)]:
        p = ModelParams(lam, eps, m)
        assert abs(force(-1 + eps, p)) < 1e-12 * lam / eps**2


def test_unregularized_force_at_rest() -> None:
    assert force(0.0, ModelParams(5.0, 0.0)) == pytest.approx(5.0)


def test_force_is_derivative_of_potential() -> None:
    eps = 0.05
    p = ModelParams(1.0, eps, 4)
    step = 1e-6
    u = -1 + eps * np.logspace(1, np.log10(11 / eps), 40)
    central = (np.asarray(potential_phi(u + step, p))
               - np.asarray(potential_phi(u - step, p))) / (2 * step)
    np.testing.assert_allclose(force(u, p), central, rtol=1e-6)


def test_force_derivative_matches_differences() -> None:
    p = ModelParams(2.0, 0.1, 5)
    u = np.linspace(-0.85, 1.0, 25)
    step = 1e-6
    central = (np.asarray(force(u + step, p)) - np.asarray(force(u - step, p))) / (2 * step)
    np.testing.assert_allclose(force_derivative(u, p), central, rtol=1e-6)


def test_potential_closed_form() -> None:
    p = ModelParams(1.0, 0.1, 4)
    assert potential_phi(0.0, p) == pytest.approx(-1 + 0.01 / 3, rel=1e-14)


def test_potential_minimum_and_blowup() -> None:
    eps = 0.1
    p = ModelParams(1.0, eps, 4)
    u = np.linspace(-1 + eps / 4, 0.5, 20001)
    phi = np.asarray(potential_phi(u, p))
    assert u[np.argmin(phi)] == pytest.approx(-1 + eps, abs=1e-4)
    assert np.all(np.diff(phi[u < -1 + eps]) < 0)
    assert np.all(np.diff(phi[u > -1 + eps]) > 0)
    assert potential_phi(-1 + 1e-8, p) > 1e6


@pytest.mark.parametrize("u", [-1.0, -1.5])
def test_closed_gap_is_rejected(u: float) -> None:
    p = ModelParams(1.0, 0.1)
    with pytest.raises(GapClosedError):
        force(u, p)
    with pytest.raises(GapClosedError):
        potential_phi(np.array([0.0, u]), p)


def test_scalar_in_scalar_out() -> None:
    p = ModelParams(1.0, 0.1)
    assert isinstance(force(0.0, p), float)
    assert np.shape(force(np.zeros(3), p)) == (3,)


def test_energy_of_flat_state() -> None:
    grid = Grid.uniform(63)
    field = Field.zeros(grid)
    assert energy(field, ModelParams(1.0, 0.0)) == pytest.approx(-2.0)
    assert energy(field, ModelParams(1.0, 0.0, order=Order.FOURTH)) == pytest.approx(-2.0)
    assert energy(field, ModelParams(3.0, 0.0)) == pytest.approx(-6.0)


def test_energy_half_weighting() -> None:
    grid = Grid.uniform(255)
    field = Field.from_function(grid, lambda x: 0.1 * (1 - x**2))
    p = ModelParams(0.0, 0.0)
    # ∫|u_x|² for u = 0.1(1 − x²) is 0.04·2/3
    assert energy(field, p, half=False) == pytest.approx(0.08 / 3, rel=1e-4)
    assert energy(field, p) == pytest.approx(0.04 / 3, rel=1e-4)


def test_energy_rejects_closed_gap() -> None:
    grid = Grid.uniform(31)
    values = np.zeros(grid.n)
    values[15] = -1.0
    with pytest.raises(GapClosedError):
        energy(Field(grid, values), ModelParams(1.0, 0.1))


@pytest.mark.parametrize("lam, eps, m, order", [
    (-1.0, 0.1, 4, Order.SECOND),
    (float('nan'), 0.1, 4, Order.SECOND),
    (1.0, 1.0, 4, Order.SECOND),
    (1.0, -0.1, 4, Order.SECOND),
    (1.0, 0.1, 2, Order.SECOND),
    (1.0, 0.1, 4, 3),
])
def test_invalid_params(lam: float, eps: float, m: int, order: Order) -> None:
    with pytest.raises(ValidationError):
        ModelParams(lam, eps, m, order).validate()


def test_params_with_lambda() -> None:
    p = ModelParams(1.0, 0.1, 5, Order.FOURTH)
    q = p.with_lambda(2.0)
    assert q == ModelParams(2.0, 0.1, 5, Order.FOURTH)
    assert "order=4" in str(q)
