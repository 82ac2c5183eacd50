"""Tests for the modified symbol, the weight G_eps and its verification."""
import json

import numpy as np
import pytest

from semispec.config import load_config
from semispec.quadmodel import quadratic_model
from semispec.symbols import principal_field
from semispec.weight import (
    SamplePlan,
    WeightParams,
    averaged_ratio_floor,
    deformed_real_part,
    expansion_slope,
    fit_weight_scaling,
    g_profile,
    j_profile,
    modified_symbol,
    verify_cohomology,
    verify_ellipticity,
    weight_G,
    weight_G0,
    weight_gradient,
    weight_hamilton_field,
    weight_hessian,
)

CATALOG = ("harmonic-complex-1d", "flat-well-1d", "anisotropic-2d")


def _spec(name="harmonic-complex-1d"):
    return load_config(name).spec


def test_profiles():
    assert g_profile(0.5) == 1.0
    assert g_profile(4.0) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        g_profile(-1.0)
    np.testing.assert_allclose(j_profile([-0.5, 0.0, 0.5, 1.0, 2.0]), [-0.25, 0.0, 0.25, 0.0, 0.0])


def test_weight_params_validation():
    with pytest.raises(ValueError):
        WeightParams(epsilon=0.0)
    with pytest.raises(ValueError):
        WeightParams(delta=0.7)
    with pytest.raises(ValueError):
        WeightParams(T=-1.0)
    params = WeightParams.from_h(0.05, A=2.0)
    assert params.epsilon == pytest.approx(0.1)
    assert params.to_dict()["A"] == 2.0


def test_modified_symbol_regions():
    spec, params = _spec(), WeightParams(epsilon=0.01)
    local = [0.03, 0.04]
    assert modified_symbol(spec, params, local) == pytest.approx(0.03**2 + 0.04**2)
    # |X|^2 = 0.25 > 2 eps: g = eps / |X|^2
    middle = [0.3, 0.4]
    assert modified_symbol(spec, params, middle) == pytest.approx(0.01)
    far = [3.0, 0.0]
    assert modified_symbol(spec, params, far) == pytest.approx(0.01 * 9.0)


def test_quadratic_weight_closed_form():
    qm = quadratic_model(_spec())
    assert weight_G0(qm, 1.0, [1.0, 1.0]) == pytest.approx(-2.0 / 3.0)
    assert weight_G0(qm, 1.0, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-14)
    assert weight_G0(qm, 2.0, [1.0, 1.0]) == pytest.approx(-8.0 / 3.0)


def test_weight_matches_quadratic_model_near_origin():
    spec, params = _spec(), WeightParams(epsilon=0.01)
    qm = quadratic_model(spec)
    pts = np.array([[1e-3, 2e-3], [-2e-3, 5e-4]])
    expected = weight_G0(qm, params.T, pts)
    np.testing.assert_allclose(weight_G(spec, params, pts), expected, atol=1e-16)
    grad = weight_gradient(spec, params, pts, step=1e-5)
    np.testing.assert_allclose(grad[:, 0], -(2.0 / 3.0) * pts[:, 1], atol=1e-9)


def test_weight_derivatives_near_origin():
    spec, params = _spec(), WeightParams(epsilon=0.01)
    pts = np.array([[1e-3, 2e-3]])
    hess = weight_hessian(spec, params, pts, step=1e-4)
    np.testing.assert_allclose(hess[0], [[0.0, -2.0 / 3.0], [-2.0 / 3.0, 0.0]], atol=1e-6)
    field = weight_hamilton_field(spec, params, pts, step=1e-5)
    np.testing.assert_allclose(field[0], [-(2.0 / 3.0) * 1e-3, (2.0 / 3.0) * 2e-3], atol=1e-9)


def test_expansion_fit_is_exact_when_weights_coincide():
    spec, params = _spec(), WeightParams(epsilon=0.01)
    fit = expansion_slope(spec, params, radii=(1e-4, 1e-3))
    assert fit.exact is True
    assert fit.slope is None
    assert fit.passed
    assert json.loads(fit.to_json())["exact"] is True


def test_expansion_fit_recovers_cubic_difference(monkeypatch):
    import semispec.weight as weight

    spec, params = _spec("flat-well-1d"), WeightParams(epsilon=0.01)

    def shifted_G0(qm, T, X, panels=64):
        pts = np.atleast_2d(X)
        return weight.weight_G(spec, params, pts) + np.linalg.norm(pts, axis=1) ** 3

    monkeypatch.setattr(weight, "weight_G0", shifted_G0)
    fit = expansion_slope(spec, params)
    assert fit.exact is False
    assert fit.slope == pytest.approx(3.0, abs=1e-6)
    assert fit.passed


@pytest.mark.parametrize("name", CATALOG)
def test_cohomology_equation_holds(name):
    residual = verify_cohomology(_spec(name), WeightParams(epsilon=0.05), samples=30)
    assert residual <= 1e-5


def test_deformed_real_part_in_local_region():
    spec, params = _spec(), WeightParams(epsilon=0.01, delta=0.1)
    a = 2.0 * params.delta / 3.0
    x, xi = 0.02, -0.03
    expected = xi**2 * (1 - a**2) + x**2 * (1 - a**2 + 2 * a)
    assert deformed_real_part(spec, params, [x, xi], step=1e-5) == pytest.approx(expected, rel=1e-5)


@pytest.mark.parametrize("name", ["harmonic-complex-1d", "flat-well-1d"])
def test_verify_ellipticity_passes_for_one_dimensional_catalog(name):
    report = verify_ellipticity(_spec(name), WeightParams(epsilon=0.01, delta=0.1))
    assert report.passed, report.to_json()
    assert [r.tag for r in report.regions] == ["local", "transition", "intermediate", "exterior"]
    assert report.averaged_ratio_floor is not None and report.averaged_ratio_floor > 0
    assert json.loads(report.to_json())["passed"] is True


def test_sample_plan_rejects_overlapping_regions():
    with pytest.raises(ValueError):
        SamplePlan(region_constant=4.0).bounds(0.1, 8.0)
    bounds = SamplePlan().bounds(0.01, 8.0)
    assert bounds["transition"] == pytest.approx((0.05, 0.2))


def test_averaged_ratio_floor_of_real_oscillator_is_one():
    from semispec.quadmodel import QuadraticModel

    qm = QuadraticModel(n=1, ReQ=np.eye(2), ImQ=np.zeros((2, 2)))
    assert averaged_ratio_floor(qm, 1.0) == pytest.approx(1.0)


def test_weight_derivatives_scale_with_epsilon():
    fit = fit_weight_scaling(_spec(), WeightParams())
    for exponent, expected in zip(fit.exponents, (1.0, 0.5, 0.0)):
        assert abs(exponent - expected) <= 0.15
    assert all(c > 0 for c in fit.constants)


@pytest.mark.parametrize("name", ["harmonic-complex-1d", "flat-well-1d"])
def test_cohomology_equation_holds_at_small_epsilon(name):
    residual = verify_cohomology(_spec(name), WeightParams(epsilon=0.01), samples=50)
    assert residual <= 1e-5


@pytest.mark.parametrize("name", CATALOG)
def test_modified_symbol_lies_between_zero_and_real_part(name):
    spec, params, plan = _spec(name), WeightParams(epsilon=0.01), SamplePlan()
    bounds = plan.bounds(0.01, 4.0).values()
    pts = np.concatenate([plan.points(spec.dim, lo, hi) for lo, hi in bounds])
    values = modified_symbol(spec, params, pts)
    re = principal_field(spec, "re").value(pts)
    assert np.all(values >= -1e-14)
    assert np.all(values <= re + 1e-12 * (1.0 + re))
