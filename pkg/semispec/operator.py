"""
Finite-dimensional discretizations of P = -h^2 Laplacian + V + iW + h p1(0, 0).

Two boundary treatments are supported: periodic Fourier collocation (the
kinetic term is diagonal in the discrete Fourier basis) and a 3-point
Dirichlet finite-difference Laplacian used as a boundary cross-check.
Potentials of flattened specs are flattened in x, so the periodic wrap sees
V = 1, W = 0 near the box edge.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigvals
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from semispec.cutoffs import bridge
from semispec.errors import ConvergenceError, DimensionMismatchError, UnsupportedSymbolError
from semispec.init_logger import get_logger
from semispec.symbols import SymbolSpec

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

BOUNDARY_CONDITIONS = ("periodic_fourier", "dirichlet_fd")
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class GridSpec:
    n: int = 1
    L: float = 12.0
    N: int = 512
    bc: str = "periodic_fourier"

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise ValueError(f"grids are supported for n = 1 or 2, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box half-width L must be positive, got {self.L}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"bc must be one of {BOUNDARY_CONDITIONS}, got {self.bc!r}")
        if self.N < 4:
            raise ValueError(f"need at least 4 points per axis, got {self.N}")
        if self.bc == "periodic_fourier" and self.N & (self.N - 1):
            raise ValueError(f"periodic_fourier needs N a power of two, got {self.N}")

    @property
    def dim(self) -> int:
        return self.N**self.n

    @property
    def spacing(self) -> float:
        if self.bc == "periodic_fourier":
            return 2.0 * self.L / self.N
        return 2.0 * self.L / (self.N + 1)

    def axis(self) -> FloatArray:
        """Collocation points per axis: [-L, L) for periodic, interior points for Dirichlet."""
        if self.bc == "periodic_fourier":
            return -self.L + self.spacing * np.arange(self.N)
        return np.linspace(-self.L, self.L, self.N + 2)[1:-1]

    def points(self) -> FloatArray:
        axis = self.axis()
        mesh = np.meshgrid(*([axis] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    matrix: ComplexArray
    h: float
    grid: GridSpec
    shift: complex = 0j

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol * scale)


def kinetic_matrix(grid: GridSpec, h: float) -> FloatArray:
    """-h^2 d^2/dx^2 on one axis."""
    N, dx = grid.N, grid.spacing
    if grid.bc == "periodic_fourier":
        k = 2.0 * np.pi * np.fft.fftfreq(N, d=dx)
        D2 = np.fft.ifft(k[:, None] ** 2 * np.fft.fft(np.eye(N), axis=0), axis=0).real
        return h**2 * 0.5 * (D2 + D2.T)
    main = 2.0 * np.ones(N)
    off = -np.ones(N - 1)
    return (h / dx) ** 2 * (np.diag(main) + np.diag(off, 1) + np.diag(off, -1))


def grid_potentials(spec: SymbolSpec, grid: GridSpec) -> tuple[FloatArray, FloatArray]:
    """V and W on the grid, flattened in x when spec.flatten_radius is set."""
    x = grid.points()
    V = spec.V.value(x).real  # type: ignore[union-attr]
    W = spec.W.value(x).real  # type: ignore[union-attr]
    if spec.flatten_radius is not None:
        R = spec.flatten_radius
        chi = bridge(np.linalg.norm(x, axis=1), R, 2.0 * R)[0]
        V = chi * V + 1.0 - chi
        W = chi * W
    return V, W


def discretize(spec: SymbolSpec, h: float, grid: GridSpec) -> OperatorMatrix:
    """Dense matrix of p^w(x, hD; h) for a Schroedinger-form spec."""
    if spec.form != "schrodinger":
        raise UnsupportedSymbolError("only Schroedinger-form symbols can be discretized on a grid")
    if grid.n != spec.n:
        raise DimensionMismatchError(
            f"grid dimension {grid.n} does not match spec dimension {spec.n}"
        )
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    if spec.flatten_radius is not None and grid.L < 4.0 * np.sqrt(spec.flatten_radius):
        logger.warning(
            "Box half-width L=%s is below the 4*sqrt(R) heuristic for flatten_radius=%s",
            grid.L, spec.flatten_radius,
        )

    K1 = kinetic_matrix(grid, h)
    if grid.n == 1:
        K = K1
    else:
        eye = np.eye(grid.N)
        K = np.kron(K1, eye) + np.kron(eye, K1)
    V, W = grid_potentials(spec, grid)
    shift = h * spec.subprincipal_at_origin()
    matrix = K.astype(complex) + np.diag(V + 1j * W + shift)
    logger.debug(
        "Discretized %s at h=%s on %s: dim=%d", spec.name or "spec", h, grid.bc, matrix.shape[0]
    )
    return OperatorMatrix(matrix=matrix, h=h, grid=grid, shift=shift)


def _sorted_by_modulus(values: ComplexArray) -> ComplexArray:
    return values[np.lexsort((np.angle(values), np.abs(values)))]


def low_eigenvalues(op: OperatorMatrix, k: int, method: str = "auto") -> ComplexArray:
    """The k eigenvalues of smallest modulus (dense up to dim 4096, shift-invert beyond)."""
    if not 1 <= k <= op.dim // 4:
        raise ValueError(f"k must lie in [1, dim/4] = [1, {op.dim // 4}], got {k}")
    if method not in ("auto", "dense", "shift_invert"):
        raise ValueError(f"unknown eigen-solver method {method!r}")
    if method == "dense" or (method == "auto" and op.dim <= DENSE_LIMIT):
        return _sorted_by_modulus(eigvals(op.matrix))[:k]
    try:
        values, vectors = eigs(op.matrix, k=k, sigma=0.0, which="LM")
    except ArpackNoConvergence as exc:
        residuals = [
            float(np.linalg.norm(op.matrix @ v - lam * v))
            for lam, v in zip(exc.eigenvalues, exc.eigenvectors.T)
        ]
        raise ConvergenceError(
            f"shift-invert iteration converged for {len(residuals)} of {k} eigenvalues",
            witness=residuals,
        ) from exc
    return _sorted_by_modulus(values)[:k]


def is_non_normal(op: OperatorMatrix) -> float:
    """Frobenius norm of P P* - P* P."""
    P = op.matrix
    Ph = P.conj().T
    return float(np.linalg.norm(P @ Ph - Ph @ P))
