"""
Quadratic model q of p0 at the origin and the spectrum of its quantization.

q(X) = <ReQ X, X> + i <ImQ X, X> with ReQ, ImQ the halved Hessians of Re p0
and Im p0 at 0. The spectrum of q^w(x, D) is the lattice
E(r) = sum_j (r_j + 1/2)(-i mu_j), mu_j the eigenvalues of the Hamilton map
F = 2 J (ReQ + i ImQ) with Re(-i mu_j) > 0. A dense Hermite-basis Galerkin
matrix serves as an independent oracle for the lattice.
"""

from __future__ import annotations

import bisect
import heapq
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import eigvals

from semispec.errors import (
    AssumptionViolationError,
    BasisTooSmallError,
    OriginNotCriticalError,
    SectorDegenerateError,
)
from semispec.init_logger import get_logger
from semispec.symbols import (
    PhaseFunction,
    SymbolSpec,
    principal_jet,
    quadratic_field,
    symplectic_matrix,
)

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

ORIGIN_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    n: int
    ReQ: FloatArray
    ImQ: FloatArray

    def __post_init__(self) -> None:
        dim = 2 * self.n
        for label in ("ReQ", "ImQ"):
            M = np.asarray(getattr(self, label), dtype=float)
            if M.shape != (dim, dim):
                raise ValueError(f"{label} must be {dim}x{dim}, got {M.shape}")
            object.__setattr__(self, label, 0.5 * (M + M.T))
        lowest = float(np.min(np.linalg.eigvalsh(self.ReQ)))
        if lowest < -PSD_TOL:
            raise AssumptionViolationError(
                f"Re q is not positive semi-definite (smallest eigenvalue {lowest:.3e})",
                witness=lowest,
            )

    @property
    def matrix(self) -> ComplexArray:
        return self.ReQ + 1j * self.ImQ

    def value(self, points: ArrayLike) -> ComplexArray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.einsum("mk,kl,ml->m", pts, self.matrix, pts)

    def re_field(self) -> PhaseFunction:
        return quadratic_field(self.ReQ, label="Re q")

    def im_field(self) -> PhaseFunction:
        return quadratic_field(self.ImQ, label="Im q")

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "ReQ": self.ReQ.tolist(), "ImQ": self.ImQ.tolist()}


def quadratic_model(spec: SymbolSpec) -> QuadraticModel:
    """Halved Hessians of p0 at 0; the origin must be a critical zero."""
    origin = np.zeros((1, spec.dim))
    value, grad, hess = principal_jet(spec, origin, 2, flatten=False)
    if abs(value[0]) > ORIGIN_TOL or np.max(np.abs(grad[0])) > ORIGIN_TOL:  # type: ignore[index]
        raise OriginNotCriticalError(
            f"p0(0) = {complex(value[0]):.3e} and |dp0(0)| = "
            f"{float(np.max(np.abs(grad[0]))):.3e} must vanish",  # type: ignore[index]
            witness=origin[0].tolist(),
        )
    H = hess[0]  # type: ignore[index]
    return QuadraticModel(n=spec.n, ReQ=0.5 * H.real, ImQ=0.5 * H.imag)


@dataclass(frozen=True, eq=False)
class HamiltonMap:
    F: ComplexArray
    mu: ComplexArray

    @property
    def frequencies(self) -> ComplexArray:
        """-i mu_j, the lattice generators."""
        return -1j * self.mu


def hamilton_map(qm: QuadraticModel, tol: float = 1e-10) -> HamiltonMap:
    """F = 2 J (ReQ + i ImQ) with the eigenvalues mu_j selected by Re(-i mu_j) > 0."""
    F = 2.0 * symplectic_matrix(qm.n) @ qm.matrix
    spectrum = eigvals(F)
    w = -1j * spectrum
    scale = max(1.0, float(np.max(np.abs(w))))
    flat = np.abs(w.real) <= tol * scale
    if np.any(flat):
        raise SectorDegenerateError(
            "Hamilton map has an eigenvalue with Re(-i mu) = 0; the averaged form is not elliptic",
            witness=complex(spectrum[np.flatnonzero(flat)[0]]),
        )
    mu = spectrum[w.real > 0]
    if mu.size != qm.n:
        raise SectorDegenerateError(
            f"expected {qm.n} eigenvalues with Re(-i mu) > 0, found {mu.size}",
            witness=spectrum.tolist(),
        )
    order = np.lexsort((np.angle(-1j * mu), np.abs(mu)))
    return HamiltonMap(F=F, mu=mu[order])


@dataclass(frozen=True, eq=False)
class Lattice:
    eigenvalues: ComplexArray
    multi_indices: tuple[tuple[int, ...], ...]
    frequencies: ComplexArray

    @property
    def sector_angle(self) -> float:
        return float(np.max(np.abs(np.angle(self.eigenvalues)), initial=0.0))

    def grouped(self, tol: float = 1e-9) -> list[tuple[complex, int]]:
        """Distinct eigenvalues (in order) with multiplicities."""
        groups: list[tuple[complex, int]] = []
        for E in self.eigenvalues:
            for i, (G, m) in enumerate(groups):
                if abs(E - G) <= tol * max(1.0, abs(G)):
                    groups[i] = (G, m + 1)
                    break
            else:
                groups.append((complex(E), 1))
        return groups

    def to_dict(self) -> dict[str, Any]:
        return {
            "eigenvalues": [
                {"re": E.real, "im": E.imag, "multiplicity": m} for E, m in self.grouped()
            ],
            "frequencies": [{"re": w.real, "im": w.imag} for w in self.frequencies],
            "sector_angle": self.sector_angle,
        }


def lattice_point(frequencies: ArrayLike, r: tuple[int, ...]) -> complex:
    w = np.asarray(frequencies, dtype=complex)
    return complex(np.sum((np.asarray(r) + 0.5) * w))


def quad_spectrum(qm: QuadraticModel, count: int, hmap: HamiltonMap | None = None) -> Lattice:
    """
    The first `count` lattice points by increasing |E|, repeated by multiplicity.

    Enumeration pops multi-indices by Re E, which increases along every
    direction; once the popped Re E exceeds the count-th smallest |E| found,
    no unseen index can enter the answer.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    w = (hmap or hamilton_map(qm)).frequencies
    start = (0,) * qm.n
    heap: list[tuple[float, tuple[int, ...]]] = [(lattice_point(w, start).real, start)]
    seen = {start}
    found: list[tuple[float, float, tuple[int, ...]]] = []
    while heap:
        re_E, r = heapq.heappop(heap)
        if len(found) >= count and re_E > found[count - 1][0] * (1 + 1e-12):
            break
        E = lattice_point(w, r)
        bisect.insort(found, (abs(E), float(np.angle(E)), r))
        for j in range(qm.n):
            nxt = tuple(r[k] + (k == j) for k in range(qm.n))
            if nxt not in seen:
                seen.add(nxt)
                heapq.heappush(heap, (lattice_point(w, nxt).real, nxt))
    chosen = found[:count]
    indices = tuple(item[2] for item in chosen)
    values = np.array([lattice_point(w, r) for r in indices], dtype=complex)
    return Lattice(eigenvalues=values, multi_indices=indices, frequencies=w)


def _ladder_operators(size: int) -> tuple[ComplexArray, ComplexArray]:
    """Position and momentum in the first `size` Hermite functions (h = 1)."""
    a = np.diag(np.sqrt(np.arange(1, size, dtype=float)), k=1)
    x = (a + a.T) / np.sqrt(2.0)
    xi = (a - a.T) / (1j * np.sqrt(2.0))
    return x.astype(complex), xi


def _embed(op: ComplexArray, axis: int, n: int, N: int) -> ComplexArray:
    out = np.ones((1, 1), dtype=complex)
    for k in range(n):
        out = np.kron(out, op if k == axis else np.eye(N))
    return out


def galerkin_matrix(qm: QuadraticModel, N: int) -> ComplexArray:
    """q^w(x, D) on the tensor Hermite basis of N functions per axis."""
    n = qm.n
    big = N + 2
    x_big, xi_big = _ladder_operators(big)
    coords = [(k, x_big) for k in range(n)] + [(k, xi_big) for k in range(n)]
    A = qm.matrix
    Q = np.zeros((N**n, N**n), dtype=complex)
    for k in range(2 * n):
        for l in range(2 * n):
            if A[k, l] == 0:
                continue
            axis_k, op_k = coords[k]
            axis_l, op_l = coords[l]
            if axis_k == axis_l:
                sym = 0.5 * (op_k @ op_l + op_l @ op_k)[:N, :N]
                term = _embed(sym, axis_k, n, N)
            else:
                term = _embed(op_k[:N, :N], axis_k, n, N) @ _embed(op_l[:N, :N], axis_l, n, N)
            Q += A[k, l] * term
    return Q


def galerkin_oracle(qm: QuadraticModel, N: int, count: int) -> ComplexArray:
    """The `count` eigenvalues of smallest modulus of the Galerkin matrix."""
    if N < 4 * count:
        raise BasisTooSmallError(
            f"basis size {N} must be at least 4 * count = {4 * count}", witness=N
        )
    Q = galerkin_matrix(qm, N)
    spectrum = eigvals(Q)
    order = np.lexsort((np.angle(spectrum), np.abs(spectrum)))
    logger.debug(
        "Galerkin oracle: basis %d^%d, smallest |E| = %.6g", N, qm.n, abs(spectrum[order[0]])
    )
    return spectrum[order[:count]]
