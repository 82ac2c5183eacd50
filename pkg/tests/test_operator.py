"""Tests for grid discretizations and low-lying eigenvalues."""
import logging
from dataclasses import replace

import numpy as np
import pytest

from semispec.config import load_config
from semispec.errors import DimensionMismatchError, UnsupportedSymbolError
from semispec.operator import (
    GridSpec,
    discretize,
    is_non_normal,
    kinetic_matrix,
    low_eigenvalues,
)
from semispec.symbols import ScalarField, SymbolSpec

X2 = ScalarField.polynomial({(2,): 1.0})
OSCILLATOR = SymbolSpec.schrodinger(X2, ScalarField.zero(1), name="oscillator")


def _harmonic_complex():
    return replace(load_config("harmonic-complex-1d").spec, flatten_radius=None)


@pytest.mark.parametrize(
    "kwargs",
    [{"n": 3}, {"N": 100}, {"L": 0.0}, {"bc": "neumann"}, {"N": 2, "bc": "dirichlet_fd"}],
)
def test_grid_spec_validation(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_dirichlet_grid_uses_interior_points():
    grid = GridSpec(L=3.0, N=5, bc="dirichlet_fd")
    assert grid.spacing == pytest.approx(1.0)
    np.testing.assert_allclose(grid.axis(), [-2.0, -1.0, 0.0, 1.0, 2.0])
    assert GridSpec(n=2, N=8).points().shape == (64, 2)


def test_fourier_kinetic_matrix_on_plane_wave():
    grid = GridSpec(L=np.pi, N=64)
    x = grid.axis()
    u = np.exp(3j * x)
    K = kinetic_matrix(grid, h=0.5)
    np.testing.assert_allclose(K @ u, 0.25 * 9.0 * u, atol=1e-10)
    np.testing.assert_allclose(K, K.T)


def test_hermitian_oscillator_spectrum():
    h = 0.1
    op = discretize(OSCILLATOR, h, GridSpec(L=6.0, N=256))
    assert op.is_hermitian()
    np.testing.assert_allclose(low_eigenvalues(op, 4), h * np.array([1, 3, 5, 7]), atol=1e-8)
    assert is_non_normal(op) <= 1e-9


def test_dirichlet_cross_check_is_second_order_close():
    op = discretize(OSCILLATOR, 0.1, GridSpec(L=6.0, N=255, bc="dirichlet_fd"))
    assert abs(low_eigenvalues(op, 1)[0] - 0.1) < 1e-3


def test_complex_potential_gives_non_normal_operator():
    op = discretize(_harmonic_complex(), 0.1, GridSpec(L=6.0, N=64))
    assert not op.is_hermitian()
    assert is_non_normal(op) > 1e-3


def test_subprincipal_shift_moves_the_diagonal():
    p1 = ScalarField.polynomial({(0, 0): 2.0 + 1.0j})
    spec = SymbolSpec.schrodinger(X2, X2, p1=p1)
    base = discretize(_harmonic_complex(), 0.1, GridSpec(L=6.0, N=64))
    shifted = discretize(spec, 0.1, GridSpec(L=6.0, N=64))
    assert shifted.shift == pytest.approx(0.2 + 0.1j)
    np.testing.assert_allclose(shifted.matrix - base.matrix, (0.2 + 0.1j) * np.eye(64), atol=1e-14)


def test_discretize_rejects_unsupported_inputs():
    general = SymbolSpec.general(ScalarField.polynomial({(2, 0): 1.0, (0, 2): 1.0}))
    with pytest.raises(UnsupportedSymbolError):
        discretize(general, 0.1, GridSpec())
    with pytest.raises(DimensionMismatchError):
        discretize(OSCILLATOR, 0.1, GridSpec(n=2, N=16))
    with pytest.raises(ValueError):
        discretize(OSCILLATOR, 0.0, GridSpec())


def test_low_eigenvalues_checks_k():
    op = discretize(OSCILLATOR, 0.1, GridSpec(L=6.0, N=16))
    with pytest.raises(ValueError):
        low_eigenvalues(op, 0)
    with pytest.raises(ValueError):
        low_eigenvalues(op, 5)
    with pytest.raises(ValueError):
        low_eigenvalues(op, 1, method="qr")


def test_shift_invert_agrees_with_dense():
    op = discretize(_harmonic_complex(), 0.1, GridSpec(L=6.0, N=128))
    dense = low_eigenvalues(op, 3, method="dense")
    sparse = low_eigenvalues(op, 3, method="shift_invert")
    np.testing.assert_allclose(sparse, dense, atol=1e-8)


def test_small_box_warns_for_flattened_spec(caplog):
    spec = load_config("harmonic-complex-1d").spec
    with caplog.at_level(logging.WARNING, logger="semispec"):
        discretize(spec, 0.1, GridSpec(L=6.0, N=64))
    assert any("4*sqrt(R)" in rec.getMessage() for rec in caplog.records)


@pytest.mark.parametrize(
    "coarse, fine",
    [
        (GridSpec(L=6.0, N=128), GridSpec(L=6.0, N=256)),
        (GridSpec(L=6.0, N=128), GridSpec(L=9.0, N=256)),
    ],
    ids=["refine-N", "widen-L"],
)
def test_low_eigenvalues_are_stable_under_grid_changes(coarse, fine):
    spec, h = load_config("harmonic-complex-1d").spec, 0.1
    first = low_eigenvalues(discretize(spec, h, coarse), 3)
    second = low_eigenvalues(discretize(spec, h, fine), 3)
    assert np.max(np.abs(first - second)) < 1e-6
