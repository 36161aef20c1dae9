import math

import numpy as np
import pytest

from mems_touchdown.numerics import (
    FarFieldCoeffs,
    FarFieldTerm,
    ValidationError,
    farfield_series,
)
from mems_touchdown.numerics.farfield import (
    eta5,
    kappa2,
    quadratic_coefficient,
    v0_third_derivative,
)


def test_quadratic_coefficient_from_first_integral() -> None:
    for lam, m in [(10.0, 4), (50.0, 3), (2.5, 6)]:
        b0 = quadratic_coefficient(lam, m)
        assert 2 * b0**2 == pytest.approx(lam * (m - 2) / (m - 1))
        assert FarFieldCoeffs.for_model(lam, m).b0 == b0


@pytest.mark.parametrize("lam, a1, b0", [(2.5, 0.7, 1.3), (50.0, -1.2, 4.0), (0.3, 2.0, 0.5)])
def test_log_coefficients(lam: float, a1: float, b0: float) -> None:
    coeffs = FarFieldCoeffs(lam, 4, b0, a1=a1)
    assert eta5(coeffs) == pytest.approx(3 * lam * a1**2 / (2 * b0**4))
    assert kappa2(coeffs) == pytest.approx(lam**2 * a1**2 / (12 * b0**7))


def test_leading_term_dominates() -> None:
    coeffs = FarFieldCoeffs.for_model(10.0, 4)
    xi = 100.0
    leading = coeffs.b0 * xi**2
    value = float(farfield_series(FarFieldTerm.V0, coeffs, xi))
    bound = (coeffs.lam / (6 * coeffs.b0**3) + 1) * math.log(xi) / xi**2
    assert abs(value - leading) / leading < bound


def test_corrections_vanish_without_constants() -> None:
    coeffs = FarFieldCoeffs.for_model(10.0, 4)
    xi = np.linspace(10.0, 200.0, 7)
    np.testing.assert_array_equal(farfield_series(FarFieldTerm.V1, coeffs, xi), 0.0)
    np.testing.assert_array_equal(farfield_series(FarFieldTerm.V2, coeffs, xi), 0.0)

    shifted = FarFieldCoeffs.for_model(10.0, 4, d1=0.5, d2=-0.25)
    np.testing.assert_allclose(farfield_series(FarFieldTerm.V1, shifted, xi), 0.5)
    np.testing.assert_allclose(farfield_series(FarFieldTerm.V2, shifted, xi), -0.25)


def test_series_keeps_shape() -> None:
    coeffs = FarFieldCoeffs.for_model(10.0, 3, c0=-1.0, a1=0.3, a2=0.1)
    xi = np.full((2, 3), 20.0)
    for term in FarFieldTerm:
        assert farfield_series(term, coeffs, xi).shape == (2, 3)


def test_series_needs_asymptotic_regime() -> None:
    coeffs = FarFieldCoeffs.for_model(10.0, 4)
    with pytest.raises(ValidationError):
        farfield_series(FarFieldTerm.V0, coeffs, [5.0, 20.0])


def test_third_derivative_of_leading_series() -> None:
    coeffs = FarFieldCoeffs.for_model(10.0, 4)
    xi, h = 200.0, 1.0

    def v0(x: float) -> float:
        return float(farfield_series(FarFieldTerm.V0, coeffs, x))

    third = (v0(xi + 2 * h) - 2 * v0(xi + h) + 2 * v0(xi - h) - v0(xi - 2 * h)) / (2 * h**3)
    assert third == pytest.approx(float(v0_third_derivative(coeffs, xi)), rel=1e-2)


def test_kronecker_flag() -> None:
    assert FarFieldCoeffs.for_model(10.0, 3).delta3 == 1.0
    assert FarFieldCoeffs.for_model(10.0, 4).delta3 == 0.0
