"""Tests for the quadratic model, its Hamilton map and the lattice oracle."""
import numpy as np
import pytest

from semispec.config import load_config
from semispec.errors import (
    AssumptionViolationError,
    BasisTooSmallError,
    OriginNotCriticalError,
    SectorDegenerateError,
)
from semispec.quadmodel import (
    QuadraticModel,
    galerkin_oracle,
    hamilton_map,
    lattice_point,
    quad_spectrum,
    quadratic_model,
)
from semispec.symbols import ScalarField, SymbolSpec

X2 = ScalarField.polynomial({(2,): 1.0})


def _scaled_harmonic(c):
    """p0 = c (xi^2 + x^2) in general form."""
    return quadratic_model(SymbolSpec.general(ScalarField.polynomial({(2, 0): c, (0, 2): c})))


def _closest_distances(expected, found):
    found = np.asarray(found)
    return np.array([np.min(np.abs(found - E)) for E in expected])


def test_quadratic_model_of_harmonic_complex():
    qm = quadratic_model(load_config("harmonic-complex-1d").spec)
    np.testing.assert_allclose(qm.ReQ, np.eye(2))
    np.testing.assert_allclose(qm.ImQ, np.diag([1.0, 0.0]))
    assert qm.value([1.0, 2.0])[0] == pytest.approx(5.0 + 1.0j)


def test_real_harmonic_oscillator_lattice():
    lattice = quad_spectrum(_scaled_harmonic(1.0), 5)
    np.testing.assert_allclose(lattice.eigenvalues, [1, 3, 5, 7, 9], atol=1e-12)
    assert lattice.sector_angle == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("c", [1.0 + 1.0j, 1.0j + 1e-3])
def test_rotated_harmonic_oscillator_lattice(c):
    lattice = quad_spectrum(_scaled_harmonic(c), 4)
    np.testing.assert_allclose(lattice.eigenvalues, [c * (2 * r + 1) for r in range(4)], atol=1e-10)


def test_harmonic_complex_frequency_and_oracle():
    qm = quadratic_model(load_config("harmonic-complex-1d").spec)
    base = 2 ** 0.25 * np.exp(1j * np.pi / 8)
    assert hamilton_map(qm).frequencies[0] == pytest.approx(2 * base)
    lattice = quad_spectrum(qm, 5)
    expected = [(2 * r + 1) * base for r in range(5)]
    np.testing.assert_allclose(lattice.eigenvalues, expected, atol=1e-12)
    for N in (60, 80):
        assert np.max(_closest_distances(lattice.eigenvalues, galerkin_oracle(qm, N, 5))) < 1e-8


def test_anisotropic_lattice_matches_oracle():
    qm = quadratic_model(load_config("anisotropic-2d").spec)
    lattice = quad_spectrum(qm, 5)
    w = lattice.frequencies
    assert w[0] == pytest.approx(np.conj(w[1]))
    assert lattice.eigenvalues[0] == pytest.approx(lattice_point(w, (0, 0)))
    assert np.max(_closest_distances(lattice.eigenvalues, galerkin_oracle(qm, 30, 5))) < 1e-6


def test_imaginary_potential_lattice_matches_oracle():
    qm = quadratic_model(SymbolSpec.schrodinger(ScalarField.zero(1), X2))
    np.testing.assert_allclose(qm.ReQ, np.diag([0.0, 1.0]))
    rotation = np.exp(1j * np.pi / 4)
    assert hamilton_map(qm).frequencies[0] == pytest.approx(2 * rotation)
    lattice = quad_spectrum(qm, 5)
    expected = [(2 * r + 1) * rotation for r in range(5)]
    np.testing.assert_allclose(lattice.eigenvalues, expected, atol=1e-12)
    assert np.max(_closest_distances(lattice.eigenvalues, galerkin_oracle(qm, 80, 5))) < 1e-6


@pytest.mark.slow
def test_anisotropic_oracle_converges_with_basis_size():
    qm = quadratic_model(load_config("anisotropic-2d").spec)
    lattice = quad_spectrum(qm, 5)
    assert np.max(_closest_distances(lattice.eigenvalues, galerkin_oracle(qm, 60, 5))) < 1e-9


def test_grouped_reports_multiplicities():
    XI_X = ScalarField.polynomial({(2, 0): 1.0, (0, 2): 1.0})
    spec = SymbolSpec.schrodinger(XI_X, ScalarField.zero(2))
    lattice = quad_spectrum(quadratic_model(spec), 6)
    groups = lattice.grouped()
    assert [m for _, m in groups] == [1, 2, 3]
    np.testing.assert_allclose([E for E, _ in groups], [2, 4, 6])
    assert lattice.to_dict()["eigenvalues"][1]["multiplicity"] == 2


def test_purely_imaginary_symbol_is_sector_degenerate():
    with pytest.raises(SectorDegenerateError):
        hamilton_map(_scaled_harmonic(1.0j))


def test_origin_must_be_a_critical_zero():
    spec = SymbolSpec.schrodinger(ScalarField.polynomial({(2,): 1.0, (1,): 1.0}), X2)
    with pytest.raises(OriginNotCriticalError) as info:
        quadratic_model(spec)
    assert info.value.witness == [0.0, 0.0]


def test_real_part_must_be_positive_semidefinite():
    with pytest.raises(AssumptionViolationError):
        QuadraticModel(n=1, ReQ=np.diag([-1.0, 1.0]), ImQ=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QuadraticModel(n=1, ReQ=np.eye(3), ImQ=np.zeros((3, 3)))


def test_oracle_rejects_small_basis_and_bad_counts():
    qm = _scaled_harmonic(1.0)
    with pytest.raises(BasisTooSmallError):
        galerkin_oracle(qm, 10, 5)
    with pytest.raises(ValueError):
        quad_spectrum(qm, 0)
