"""
Resolvent norms, pseudospectra and the h-scaling studies.

||(P - lambda)^{-1}|| = 1 / sigma_min(P - lambda). Small matrices use dense
singular values; large ones use inverse iteration on (P - lambda)^*(P - lambda)
with a single LU factorization. Pseudospectrum sweeps reduce P to Schur form
once and iterate with triangular solves.

The scaling study samples lambda = h z with z in the disk |z| <= C minus the
disks |z - (E_j + p1(0,0))| < rho around the shifted lattice of the quadratic
model, and checks that sup h ||(P - lambda)^{-1}|| stays bounded as h shrinks.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy.linalg import lu_factor, lu_solve, schur, solve_triangular, svdvals
from scipy.optimize import linear_sum_assignment

from semispec.errors import ConvergenceError, SamplePlanError, SpectralHitError
from semispec.init_logger import get_logger
from semispec.operator import GridSpec, OperatorMatrix, discretize, low_eigenvalues
from semispec.parallel import parallel_map
from semispec.quadmodel import quad_spectrum, quadratic_model
from semispec.symbols import SymbolSpec

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

SVD_LIMIT = 2048
HIT_TOL = 1e-14
MAX_RESOLUTION = 512
MIN_SCALING_H = 4
MIN_COMPARE_H = 2
RING_RADII = (0.25, 0.5, 0.75, 1.0)


def _operator_scale(matrix: ComplexArray) -> float:
    return max(1.0, float(np.linalg.norm(matrix, 1)))


def _inverse_iteration(A: ComplexArray, tol: float = 1e-12, maxiter: int = 500) -> float:
    """sigma_min(A) from power iteration on (A^* A)^{-1}."""
    lu, piv = lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu))) == 0.0:
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.normal(size=A.shape[0]) + 1j * rng.normal(size=A.shape[0])
    v /= np.linalg.norm(v)
    previous = 0.0
    history: list[float] = []
    for _ in range(maxiter):
        u = lu_solve((lu, piv), lu_solve((lu, piv), v, trans=2))
        growth = float(np.linalg.norm(u))
        if not np.isfinite(growth):
            return 0.0
        v = u / growth
        history.append(growth)
        if abs(growth - previous) <= tol * growth:
            return 1.0 / np.sqrt(growth)
        previous = growth
    raise ConvergenceError("inverse iteration for sigma_min did not converge", witness=history[-5:])


def smallest_singular_value(op: OperatorMatrix, lam: complex, method: str = "auto") -> float:
    A = op.matrix - lam * np.eye(op.dim)
    if method == "svd" or (method == "auto" and op.dim <= SVD_LIMIT):
        return float(svdvals(A)[-1])
    return _inverse_iteration(A)


def resolvent_norm(op: OperatorMatrix, lam: complex, method: str = "auto") -> float:
    """1 / sigma_min(P - lambda); a numerically singular P - lambda raises SpectralHitError."""
    sigma = smallest_singular_value(op, complex(lam), method)
    if sigma < HIT_TOL * _operator_scale(op.matrix):
        raise SpectralHitError(
            f"sigma_min(P - lambda) = {sigma:.3e}: lambda lies on the computed spectrum",
            witness=complex(lam),
        )
    return 1.0 / sigma


# ---------------------------------------------------------------------------
# Pseudospectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexBox:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate box {self}")

    @classmethod
    def parse(cls, text: str) -> "ComplexBox":
        """'re_min,re_max,im_min,im_max'"""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"box needs four comma-separated numbers, got {text!r}")
        return cls(*(float(p) for p in parts))

    @classmethod
    def disk_cover(cls, radius: float) -> "ComplexBox":
        return cls(-radius, radius, -radius, radius)

    def grid(self, nx: int, ny: int) -> ComplexArray:
        re = np.linspace(self.re_min, self.re_max, nx)
        im = np.linspace(self.im_min, self.im_max, ny)
        return re[None, :] + 1j * im[:, None]


@dataclass(eq=False)
class PseudospectrumField:
    lambda_grid: ComplexArray
    sigma_min: FloatArray

    @property
    def resolvent_norm(self) -> FloatArray:
        with np.errstate(divide="ignore"):
            return np.where(self.sigma_min == 0.0, np.inf, 1.0 / self.sigma_min)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "re_lambda": self.lambda_grid.real.ravel(),
                "im_lambda": self.lambda_grid.imag.ravel(),
                "sigma_min": self.sigma_min.ravel(),
            }
        )

    def local_minima(self) -> ComplexArray:
        """Interior grid points whose sigma_min is below all eight neighbours."""
        s = self.sigma_min
        core = s[1:-1, 1:-1]
        is_min = np.ones_like(core, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    is_min &= core < s[1 + di : s.shape[0] - 1 + di, 1 + dj : s.shape[1] - 1 + dj]
        return self.lambda_grid[1:-1, 1:-1][is_min]


def _triangular_sigma_min(
    T: ComplexArray, lam: complex, tol: float = 1e-10, maxiter: int = 60
) -> float:
    A = T - lam * np.eye(T.shape[0])
    if np.min(np.abs(np.diag(A))) == 0.0:
        return 0.0
    v = np.ones(T.shape[0], dtype=complex) / np.sqrt(T.shape[0])
    previous = 0.0
    for _ in range(maxiter):
        u = solve_triangular(A, solve_triangular(A, v, trans="C"))
        growth = float(np.linalg.norm(u))
        if not np.isfinite(growth):
            return 0.0
        v = u / growth
        if abs(growth - previous) <= tol * growth:
            return 1.0 / np.sqrt(growth)
        previous = growth
    return float(svdvals(A)[-1])


def pseudospectrum(
    op: OperatorMatrix, region: ComplexBox, resolution: int | tuple[int, int], threads: int = 1
) -> PseudospectrumField:
    """sigma_min(P - lambda) on a resolution grid over the box; rows are independent."""
    nx, ny = (resolution, resolution) if isinstance(resolution, int) else resolution
    if not (2 <= nx <= MAX_RESOLUTION and 2 <= ny <= MAX_RESOLUTION):
        raise ValueError(f"resolution must lie in [2, {MAX_RESOLUTION}] per axis, got {(nx, ny)}")
    lambdas = region.grid(nx, ny)

    if op.dim <= 256:
        def row(i: int) -> FloatArray:
            return np.array([smallest_singular_value(op, lam, "svd") for lam in lambdas[i]])
    else:
        T, _ = schur(op.matrix, output="complex")

        def row(i: int) -> FloatArray:
            return np.array([_triangular_sigma_min(T, lam) for lam in lambdas[i]])

    sigma = np.vstack(parallel_map(row, range(ny), threads))
    logger.info("Pseudospectrum on %dx%d grid: min sigma %.3e", nx, ny, float(np.min(sigma)))
    return PseudospectrumField(lambda_grid=lambdas, sigma_min=sigma)


# ---------------------------------------------------------------------------
# Lattice helpers
# ---------------------------------------------------------------------------


def shifted_lattice(spec: SymbolSpec, reach: float, cap: int = 512) -> ComplexArray:
    """All lattice points E_j + p1(0, 0) with modulus <= reach."""
    qm = quadratic_model(spec)
    shift = spec.subprincipal_at_origin()
    count = 8
    while True:
        values = quad_spectrum(qm, count).eigenvalues + shift
        if np.max(np.abs(values)) > reach or count >= cap:
            return values[np.abs(values) <= reach]
        count *= 2


@dataclass(eq=False)
class LambdaPlan:
    """Sample points z (lambda = h z) and the excluded centers, both in units of h."""

    points: ComplexArray
    centers: ComplexArray
    C: float
    rho: float


def build_sample_plan(
    spec: SymbolSpec,
    C: float,
    rho: float,
    samples_per_ring: int = 64,
    extra_points: Sequence[complex] = (),
) -> LambdaPlan:
    if not (C > 0 and rho > 0):
        raise ValueError(f"C and rho must be positive, got C={C}, rho={rho}")
    centers = shifted_lattice(spec, C + rho)

    def clear(z: ComplexArray) -> NDArray[np.bool_]:
        if centers.size == 0:
            return np.ones(z.shape, dtype=bool)
        return np.min(np.abs(z[:, None] - centers[None, :]), axis=1) >= rho

    angles = 2.0 * np.pi * np.arange(samples_per_ring) / samples_per_ring
    rings = np.concatenate([r * C * np.exp(1j * angles) for r in RING_RADII])
    ordered = centers[np.lexsort((np.angle(centers), np.abs(centers)))]
    mids = 0.5 * (ordered[1:] + ordered[:-1]) if ordered.size > 1 else np.zeros(0, dtype=complex)
    mids = mids[np.abs(mids) <= C]
    auto = np.concatenate([rings, mids])
    auto = auto[clear(auto)]

    extra = np.asarray(list(extra_points), dtype=complex)
    if extra.size:
        bad = ~clear(extra) | (np.abs(extra) > C)
        if np.any(bad):
            raise SamplePlanError(
                "explicit lambda samples must lie in D(0, C) outside the excluded lattice disks",
                witness=complex(extra[np.flatnonzero(bad)[0]]),
            )
    points = np.concatenate([auto, extra])
    if points.size == 0:
        raise SamplePlanError(f"no lambda samples remain for C={C}, rho={rho}")
    return LambdaPlan(points=points, centers=centers, C=C, rho=rho)


def match_to_lattice(
    scaled: ComplexArray, lattice: ComplexArray
) -> tuple[NDArray[np.int64], FloatArray]:
    """Optimal assignment of eigenvalues (in units of h) to lattice points."""
    cost = np.abs(scaled[:, None] - lattice[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.argsort(rows)
    return cols[order], cost[rows[order], cols[order]]


# ---------------------------------------------------------------------------
# Scaling study
# ---------------------------------------------------------------------------


@dataclass
class ScalingRow:
    h: float
    sup_h_resolvent: float
    argmax_z: list[float]
    samples: int
    lattice_deviation: float


@dataclass
class ScalingReport:
    spec: str | None
    C: float
    rho: float
    samples_per_ring: int
    rows: list[ScalingRow]
    ratio: float
    ratio_limit: float
    verdict: str
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows])

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def check_h_list(h_list: Sequence[float], minimum: int) -> list[float]:
    """Positive, strictly decreasing h values, at least `minimum` of them."""
    hs = [float(h) for h in h_list]
    if len(hs) < minimum:
        raise ValueError(f"need at least {minimum} values of h, got {len(hs)}")
    if any(h <= 0 for h in hs) or any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError(f"h_list must be positive and strictly decreasing, got {hs}")
    return hs


def scaling_study(
    spec: SymbolSpec,
    h_list: Sequence[float],
    C: float = 4.0,
    rho: float = 0.3,
    samples_per_h: int = 64,
    grid: GridSpec | None = None,
    extra_points: Sequence[complex] = (),
    threads: int = 1,
    ratio_limit: float = 2.0,
    lattice_count: int = 3,
) -> ScalingReport:
    """
    sup over the sample plan of h ||(P - h z)^{-1}|| for each h.

    `samples_per_h` is the number of angles per ring; `extra_points` are
    additional samples z (in units of h). PASS iff max/min of the sups <= ratio_limit.
    """
    hs = check_h_list(h_list, MIN_SCALING_H)
    grid = grid or GridSpec(n=spec.n)
    plan = build_sample_plan(spec, C, rho, samples_per_h, extra_points)
    lattice = shifted_lattice(spec, float(np.max(np.abs(plan.centers), initial=0.0)) + 1.0)

    rows: list[ScalingRow] = []
    for h in hs:
        op = discretize(spec, h, grid)
        norms = np.array(parallel_map(lambda z: resolvent_norm(op, h * z), plan.points, threads))
        scaled = h * norms
        top = int(np.argmax(scaled))
        eigen = low_eigenvalues(op, min(lattice_count, op.dim // 4)) / h
        _, dev = match_to_lattice(eigen, lattice) if lattice.size else (None, np.array([np.nan]))
        rows.append(
            ScalingRow(
                h=h,
                sup_h_resolvent=float(scaled[top]),
                argmax_z=[float(plan.points[top].real), float(plan.points[top].imag)],
                samples=int(plan.points.size),
                lattice_deviation=float(np.max(dev)),
            )
        )
        logger.info("h=%g: sup h*||R|| = %.4g over %d samples", h, scaled[top], plan.points.size)

    sups = np.array([r.sup_h_resolvent for r in rows])
    ratio = float(np.max(sups) / np.min(sups))
    verdict = "PASS" if ratio <= ratio_limit else "FAIL"
    logger.info("Scaling study verdict %s (max/min ratio %.3f)", verdict, ratio)
    return ScalingReport(
        spec=spec.name,
        C=C,
        rho=rho,
        samples_per_ring=samples_per_h,
        rows=rows,
        ratio=ratio,
        ratio_limit=ratio_limit,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# Lattice comparison
# ---------------------------------------------------------------------------


@dataclass
class LatticeComparison:
    table: pd.DataFrame
    verdict: str
    order: float
    slack: float
    atol: float

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def deviations(self) -> pd.DataFrame:
        """Deviation per (h, j) as a wide frame: one row per h, one column per j."""
        table = self.table.pivot(index="h", columns="j", values="deviation")
        return table.sort_index(ascending=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "order": self.order,
            "slack": self.slack,
            "atol": self.atol,
            "rows": self.table.to_dict(orient="records"),
        }


def lattice_compare(
    spec: SymbolSpec,
    h_list: Sequence[float],
    count: int = 3,
    grid: GridSpec | None = None,
    slack: float = 0.1,
    atol: float = 1e-8,
) -> LatticeComparison:
    """
    |lambda_num / h - (E_j + p1(0,0))| for the `count` smallest eigenvalues per h.

    PASS iff every deviation sequence decreases along h_list up to a relative
    slack, deviations below `atol` counting as converged. `order` is the
    fitted log-log slope of the worst deviation against h (nan when fewer than
    two deviations exceed atol).
    """
    hs = check_h_list(h_list, MIN_COMPARE_H)
    grid = grid or GridSpec(n=spec.n)
    qm = quadratic_model(spec)
    lattice = quad_spectrum(qm, count + 2).eigenvalues + spec.subprincipal_at_origin()

    records = []
    for h in hs:
        op = discretize(spec, h, grid)
        scaled = low_eigenvalues(op, count) / h
        cols, dev = match_to_lattice(scaled, lattice)
        for j, (lam, col, d) in enumerate(zip(scaled, cols, dev)):
            records.append(
                {
                    "h": h,
                    "j": j,
                    "lambda_re": float(lam.real),
                    "lambda_im": float(lam.imag),
                    "lattice_re": float(lattice[col].real),
                    "lattice_im": float(lattice[col].imag),
                    "deviation": float(d),
                }
            )
    table = pd.DataFrame.from_records(records)

    wide = table.pivot(index="h", columns="j", values="deviation").loc[hs]
    monotone = True
    for j in wide.columns:
        seq = wide[j].to_numpy()
        for prev, cur in zip(seq, seq[1:]):
            if cur > (1.0 + slack) * prev and cur > atol:
                monotone = False
    worst = wide.max(axis=1).to_numpy()
    keep = worst > atol
    order = float("nan")
    if np.count_nonzero(keep) >= 2:
        order = float(np.polyfit(np.log(np.asarray(hs)[keep]), np.log(worst[keep]), 1)[0])
    verdict = "PASS" if monotone else "FAIL"
    logger.info("Lattice comparison verdict %s, empirical order %.3g", verdict, order)
    return LatticeComparison(table=table, verdict=verdict, order=order, slack=slack, atol=atol)
