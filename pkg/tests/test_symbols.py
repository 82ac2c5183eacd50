"""Tests for symbol specifications, evaluation and the assumption checkers."""
import json

import numpy as np
import pytest

from semispec.config import load_config
from semispec.errors import (
    ConfigError,
    DimensionMismatchError,
    EllipticityError,
    UnsupportedSymbolError,
)
from semispec.symbols import (
    PhasePoint,
    SampleBox,
    ScalarField,
    SymbolSpec,
    ball_samples,
    check_assumptions,
    check_order_function,
    complex_extension,
    eval_symbol,
    flatten_symbol,
    principal_field,
    spec_from_dict,
)

X2 = ScalarField.polynomial({(2,): 1.0})


def _harmonic(flatten=None):
    return SymbolSpec.schrodinger(X2, X2, flatten_radius=flatten, name="harmonic-complex")


def _flat_well(flatten=None):
    return SymbolSpec.schrodinger(ScalarField.from_catalog("flat_well"), X2, flatten_radius=flatten)


def test_phase_point_rejects_mismatched_lengths():
    with pytest.raises(DimensionMismatchError):
        PhasePoint((1.0,), (1.0, 2.0))
    X = PhasePoint.from_array([3.0, 4.0])
    assert X.n == 1
    assert X.norm() == pytest.approx(5.0)


def test_eval_symbol_value_gradient_hessian():
    spec = _harmonic()
    assert eval_symbol(spec, PhasePoint((1.0,), (1.0,))) == pytest.approx(2.0 + 1.0j)
    grad = eval_symbol(spec, [1.0, 2.0], order=1)
    np.testing.assert_allclose(grad, [2.0 + 2.0j, 4.0])
    hess = eval_symbol(spec, [0.3, -0.1], order=2)
    np.testing.assert_allclose(hess, [[2.0 + 2.0j, 0.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        eval_symbol(spec, [0.0, 0.0], order=3)


def test_eval_symbol_checks_dimension():
    with pytest.raises(DimensionMismatchError):
        eval_symbol(_harmonic(), [1.0, 2.0, 3.0])


def test_flattened_symbol_agrees_inside_and_is_one_far_out():
    flat = _harmonic(flatten=1.0)
    raw = _harmonic()
    inside = np.array([[0.3, 0.2], [-0.5, 0.6]])
    np.testing.assert_allclose(eval_symbol(flat, inside), eval_symbol(raw, inside))
    assert eval_symbol(flat, [3.0, 0.0]) == pytest.approx(1.0)
    np.testing.assert_allclose(eval_symbol(flat, [0.0, -2.5], order=1), 0.0, atol=1e-14)


def test_flatten_symbol_sets_radius_and_detects_nonelliptic_symbols():
    assert flatten_symbol(_harmonic(), 2.0).flatten_radius == 2.0
    bad = SymbolSpec.schrodinger(ScalarField.polynomial({(2,): -1.0}), X2)
    with pytest.raises(EllipticityError) as info:
        flatten_symbol(bad, 1.0)
    assert info.value.witness is not None


def test_flat_well_catalog_field():
    well = ScalarField.from_catalog("flat_well")
    values = well.value(np.array([[0.0], [0.9], [2.0]])).real
    assert values[0] == 0.0 and values[1] == 0.0
    assert values[2] == pytest.approx(np.exp(-1.0 / 3.0))
    assert not well.is_polynomial
    with pytest.raises(UnsupportedSymbolError):
        ScalarField.from_catalog("nope")


def test_scalar_field_roundtrip_through_json():
    field = ScalarField.polynomial({(2, 0): 1.0, (1, 1): 1.0 + 2.0j, (0, 2): -0.5})
    restored = ScalarField.from_dict(json.loads(json.dumps(field.to_dict())))
    assert restored == field
    spec = _flat_well(flatten=4.0)
    assert spec_from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_spec_from_dict_reports_offending_field():
    data = {
        "n": 1,
        "form": "schrodinger",
        "V": {"kind": "polynomial", "dim": 1, "terms": [{"powers": [2, 0], "coeff": 1.0}]},
        "W": {"kind": "polynomial", "dim": 1, "terms": [{"powers": [2], "coeff": 1.0}]},
    }
    with pytest.raises(ConfigError) as info:
        spec_from_dict(data)
    assert info.value.pointer == "spec.V.terms[0].powers"

    data["V"]["terms"][0] = {"powers": [2], "coeff": [1.0, 1.0]}
    with pytest.raises(ConfigError) as info:
        spec_from_dict(data)
    assert info.value.pointer == "spec.V"


def test_complex_extension_is_exact_for_polynomials():
    z_x, z_xi = 1.0 + 0.5j, 0.3j
    expected = z_xi**2 + z_x**2 + 1j * z_x**2
    value = complex_extension(_harmonic(), np.array([[z_x, z_xi]]))[0]
    assert value == pytest.approx(expected)


def test_complex_extension_limits_jet_to_a_tube():
    spec = _flat_well()
    complex_extension(spec, np.array([[1.5 + 0.2j, 0.1j]]))
    with pytest.raises(UnsupportedSymbolError):
        complex_extension(spec, np.array([[1.5 + 1.0j, 0.0]]))


def test_principal_field_exposes_closed_form_hook():
    im = principal_field(_harmonic(), "im")
    assert im.position_gradient is not None
    np.testing.assert_allclose(im.position_gradient(np.array([[1.5]])), [[3.0]])
    np.testing.assert_allclose(im.hamilton_field([[1.5, 0.0]]), [[0.0, -3.0]])
    assert principal_field(_harmonic(), "re").position_gradient is None


def test_check_assumptions_accepts_flattened_catalog_symbol():
    report = check_assumptions(_harmonic(flatten=4.0), SampleBox(radius=8.0, points_per_axis=41))
    assert report.all_ok, report.to_json()
    assert report.flattened
    assert report.ellipticity_constant is not None
    assert json.loads(report.to_json())["all_ok"] is True


def test_check_assumptions_reports_witnesses():
    negative = SymbolSpec.schrodinger(ScalarField.polynomial({(2,): -1.0}), X2)
    report = check_assumptions(negative, SampleBox(radius=4.0, points_per_axis=21))
    assert not report.positivity.ok
    assert report.positivity.witness is not None
    assert not report.all_ok

    no_imaginary_part = SymbolSpec.schrodinger(X2, ScalarField.zero(1))
    report = check_assumptions(no_imaginary_part, SampleBox(radius=4.0, points_per_axis=21))
    assert not report.critical_set.ok
    assert report.critical_set.witness == [0.0, 0.0]


def test_check_assumptions_requires_box_covering_flattening():
    with pytest.raises(ValueError):
        check_assumptions(_harmonic(flatten=4.0), SampleBox(radius=6.0))


def test_check_order_function_fits_small_exponent():
    spec = _harmonic(flatten=4.0)
    pairs = np.stack(
        [ball_samples(2, 200, 10.0, seed=0), ball_samples(2, 200, 10.0, seed=1)], axis=1
    )
    fit = check_order_function(spec, pairs)
    assert fit.ok
    assert fit.N in (0, 1, 2)
    assert fit.C <= 4.0
    with pytest.raises(DimensionMismatchError):
        check_order_function(spec, np.zeros((3, 2, 3)))


@pytest.mark.parametrize("name, points_per_axis", [("flat-well-1d", 41), ("anisotropic-2d", 17)])
def test_check_assumptions_accepts_bundled_problems(name, points_per_axis):
    spec = load_config(name).spec
    report = check_assumptions(spec, SampleBox(radius=8.0, points_per_axis=points_per_axis))
    assert report.all_ok, report.to_json()


def test_cubic_imaginary_part_fails_critical_set_and_growth():
    cubic = SymbolSpec.schrodinger(X2, ScalarField.polynomial({(3,): 1.0}))
    report = check_assumptions(cubic, SampleBox(radius=4.0, points_per_axis=21))
    assert not report.critical_set.ok
    assert report.critical_set.witness == [0.0, 0.0]
    assert not report.quadratic_growth.ok
    assert report.quadratic_growth.witness is not None
    assert not report.all_ok


def test_flattened_value_in_the_transition_shell_interpolates_towards_one():
    X = [7.5, 0.0]
    raw = eval_symbol(_harmonic(), X)
    blended = eval_symbol(flatten_symbol(_harmonic(), 5.0), X)
    assert 1.0 < blended.real < raw.real
    assert 0.0 < blended.imag < raw.imag
    # both parts use the same cutoff value chi
    assert (blended.real - 1.0) / (raw.real - 1.0) == pytest.approx(blended.imag / raw.imag)
