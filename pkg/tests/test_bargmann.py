"""Tests for the FBI transform, its normalization and the quantization residuals."""
import json
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from semispec.bargmann import (
    CLOSED_FORM_NORMALIZATION,
    BargmannGrid,
    WeylSymbol,
    bargmann_norm,
    calibrate_normalization,
    cauchy_riemann_residual,
    check_unitarity,
    fbi_transform,
    fbi_verify,
    ground_state,
    hermite_function,
    quant_mult_check,
    quant_mult_residuals,
    real_norm,
    transform_at,
)
from semispec.errors import InsufficientDecayError


def _gaussian(center=0.0):
    def u(y, h):
        return np.exp(-((y - center) ** 2) / (2.0 * h))

    return u


def test_default_grid_layout():
    grid = BargmannGrid.for_h(1.0)
    assert grid.points == 121
    assert grid.spacing == pytest.approx(1.0 / 6.0)
    assert grid.z.shape == (121, 121)
    assert grid.z[0, -1] == pytest.approx(10.0 - 10.0j)
    assert BargmannGrid.for_h(0.01).half_width == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BargmannGrid(h=1.0, half_width=1.0, points=10)
    with pytest.raises(ValueError):
        BargmannGrid(h=0.0, half_width=1.0, points=11)


def test_calibrated_normalization_matches_closed_form():
    assert calibrate_normalization() == pytest.approx(CLOSED_FORM_NORMALIZATION, rel=1e-8)


def test_transform_of_gaussians_matches_closed_form():
    h = 0.1
    c = calibrate_normalization()
    grid = BargmannGrid.for_h(h)
    z = np.array([0.3 + 0.2j, -0.1 - 0.4j])
    for center in (0.0, 0.3):
        expected = c * h**-0.75 * math.sqrt(math.pi * h) * np.exp(-((z - center) ** 2) / (4.0 * h))
        np.testing.assert_allclose(transform_at(_gaussian(center), grid, z), expected, rtol=1e-10)


@pytest.mark.parametrize("h", [1.0, 0.1, 0.01])
def test_transform_is_unitary_on_hermite_functions(h):
    assert check_unitarity([hermite_function(k) for k in range(6)], [h]) <= 1e-5


def test_transform_is_linear():
    h = 0.05
    grid = BargmannGrid.for_h(h)
    u, v = hermite_function(1), hermite_function(4)
    combined = 2.0 * u(grid.y, h) - 3.0j * v(grid.y, h)
    expected = 2.0 * fbi_transform(u, h, grid) - 3.0j * fbi_transform(v, h, grid)
    np.testing.assert_allclose(fbi_transform(combined, h, grid), expected, atol=1e-12)
    scaled = fbi_transform(7.0 * u(grid.y, h), h, grid)
    assert bargmann_norm(scaled, grid) == pytest.approx(7.0 * real_norm(u, grid), rel=1e-6)


def test_hermite_functions_are_orthonormal():
    h = 0.1
    grid = BargmannGrid.for_h(h)
    values = np.array([hermite_function(k)(grid.y, h) for k in range(5)])
    gram = trapezoid(values[:, None, :] * values[None, :, :], dx=grid.spacing, axis=2)
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)
    with pytest.raises(ValueError):
        hermite_function(-1)


def test_slowly_decaying_input_is_rejected():
    wide = _gaussian()
    with pytest.raises(InsufficientDecayError) as info:
        fbi_transform(lambda y, h: wide(y, 100.0 * h), 0.1)
    assert info.value.witness["edge"] > 0


def test_transform_checks_grid_and_sample_shape():
    grid = BargmannGrid.for_h(0.1)
    with pytest.raises(ValueError):
        fbi_transform(ground_state(), 0.05, grid)
    with pytest.raises(ValueError):
        fbi_transform(np.ones(7), 0.1, grid)


def test_constant_symbol_has_no_quantization_residual():
    residuals = quant_mult_residuals(WeylSymbol.constant(), None, [0.1, 0.05])
    assert np.all(residuals < 1e-12)
    assert math.isnan(quant_mult_check(WeylSymbol.constant(), None, [0.1, 0.05]))


@pytest.mark.parametrize(
    "symbol, factor", [(WeylSymbol.x_squared(), 0.5), (WeylSymbol.harmonic(), 1.0)]
)
def test_quantization_residual_is_first_order_in_h(symbol, factor):
    hs = [0.1, 0.05, 0.025]
    residuals = quant_mult_residuals(symbol, ground_state(), hs)
    np.testing.assert_allclose(residuals, factor * np.asarray(hs), rtol=1e-4)
    slope = quant_mult_check(symbol, ground_state(), hs)
    assert 0.9 <= slope <= 1.5


def test_weyl_symbol_requires_one_dimensional_potential():
    from semispec.symbols import ScalarField

    with pytest.raises(ValueError):
        WeylSymbol(ScalarField.polynomial({(2, 0): 1.0}))


def test_transform_satisfies_cauchy_riemann():
    assert cauchy_riemann_residual(ground_state(), 0.1) <= 1e-4
    assert cauchy_riemann_residual(hermite_function(3), 0.05) <= 1e-4


def test_fbi_verify_report():
    report = fbi_verify([0.1, 0.05, 0.025])
    assert report.passed, report.to_json()
    assert set(report.quant_mult_slopes) == {"x^2", "x^2+xi^2"}
    assert report.normalization == pytest.approx(CLOSED_FORM_NORMALIZATION, rel=1e-8)
    assert json.loads(report.to_json())["passed"] is True
    with pytest.raises(ValueError):
        fbi_verify([0.1])
