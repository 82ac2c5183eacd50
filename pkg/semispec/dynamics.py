"""
Hamiltonian flows of real phase-space functions and their time averages.

<a>_{b,T}(X) = (1/2T) int_{-T}^{T} a(exp(tH_b) X) dt is computed with composite
Gauss-Legendre quadrature whose panels split at t = 0. Trajectories come from
one of three integrators:

- closed_form_schrodinger: b = W(x) gives exp(tH_b)(x, xi) = (x, xi - t grad W(x));
  for a flattened symbol this holds until the path reaches the flattening
  radius, and escaping paths are handed to rk4;
- linear: quadratic b has a linear Hamilton field, integrated with expm;
- rk4: fixed-step Runge-Kutta for everything else (flattened symbols, general form).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import expm

from semispec.errors import FlowDivergenceError, UnsupportedSymbolError
from semispec.init_logger import get_logger
from semispec.parallel import map_row_chunks
from semispec.quadmodel import QuadraticModel, quadratic_model
from semispec.symbols import (
    PhaseFunction,
    PhasePoint,
    SymbolSpec,
    as_points,
    ball_samples,
    box_grid,
    principal_field,
    shell_samples,
    symplectic_matrix,
)

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]

METHODS = ("closed_form_schrodinger", "rk4", "linear")
DIVERGENCE_RADIUS = 1e6


@dataclass(frozen=True)
class FlowConfig:
    method: str = "rk4"
    dt: float | None = None
    T: float = 1.0
    panels: int = 64
    nodes_per_panel: int = 8

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"flow method must be one of {METHODS}, got {self.method!r}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got T={self.T}")
        if self.dt is None:
            # rk4 step follows the window unless given explicitly
            object.__setattr__(self, "dt", self.T / 1000.0)
        if not self.step > 0:
            raise ValueError(f"dt must be positive, got dt={self.dt}")
        if self.method == "rk4" and self.step > self.T / 50:
            raise ValueError(f"rk4 step {self.step} exceeds T/50 = {self.T / 50}")
        if self.panels < 2 or self.panels % 2:
            raise ValueError(f"panels must be a positive even number, got {self.panels}")
        if self.nodes_per_panel < 1:
            raise ValueError("nodes_per_panel must be positive")

    @property
    def step(self) -> float:
        assert self.dt is not None
        return self.dt


def as_field(b: SymbolSpec | PhaseFunction) -> PhaseFunction:
    """A SymbolSpec stands for its generator Im p0."""
    if isinstance(b, SymbolSpec):
        return principal_field(b, "im")
    return b


def default_flow_config(
    b: SymbolSpec | PhaseFunction, T: float = 1.0, panels: int = 64
) -> FlowConfig:
    """The exact integrator when one exists, otherwise rk4 with dt = T/1000."""
    fld = as_field(b)
    if fld.linear_map is not None:
        method = "linear"
    elif fld.position_gradient is not None:
        method = "closed_form_schrodinger"
    else:
        method = "rk4"
    return FlowConfig(method=method, T=T, panels=panels)


def quadrature_rule(
    T: float, panels: int = 64, nodes_per_panel: int = 8
) -> tuple[FloatArray, FloatArray]:
    """Composite Gauss-Legendre nodes and weights on [-T, T]; panel edges include t = 0."""
    if panels % 2:
        raise ValueError("panel count must be even so that t = 0 is a panel edge")
    edges = np.linspace(-T, T, panels + 1)
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(nodes_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


def _check_divergence(states: FloatArray, start: FloatArray, t: float) -> None:
    norms = np.linalg.norm(states, axis=-1)
    if np.any(~np.isfinite(norms)) or np.any(norms > DIVERGENCE_RADIUS):
        bad = int(np.flatnonzero(~(norms <= DIVERGENCE_RADIUS))[0])
        raise FlowDivergenceError(
            f"trajectory left the ball of radius {DIVERGENCE_RADIUS:g} before t = {t:.4g}",
            witness=start[bad].tolist(),
        )


def _rk4_step(f: Callable[[FloatArray], FloatArray], y: FloatArray, h: float) -> FloatArray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_trajectory(
    fld: PhaseFunction, pts: FloatArray, times: FloatArray, dt: float
) -> FloatArray:
    out = np.empty((times.size,) + pts.shape)
    for sign in (1.0, -1.0):
        idx = np.flatnonzero(times * sign > 0)
        idx = idx[np.argsort(times[idx] * sign)]
        state, now = pts.copy(), 0.0
        for i in idx:
            target = abs(times[i])
            while now < target - 1e-15:
                step = min(dt, target - now)
                state = _rk4_step(fld.hamilton_field, state, sign * step)
                now += step
                _check_divergence(state, pts, sign * now)
            out[i] = state
    out[times == 0] = pts
    return out


def trajectory(
    b: SymbolSpec | PhaseFunction,
    points: ArrayLike,
    times: ArrayLike,
    cfg: FlowConfig | None = None,
) -> FloatArray:
    """States exp(tH_b)X for every t in `times` and row X of `points`, shape (len(times), m, 2n)."""
    fld = as_field(b)
    cfg = cfg or default_flow_config(fld)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    n = fld.dim // 2

    if cfg.method == "closed_form_schrodinger":
        if fld.position_gradient is None:
            raise UnsupportedSymbolError(f"no closed-form flow for {fld.label or 'this field'}")
        shift = np.zeros_like(pts)
        shift[:, n:] = -fld.position_gradient(pts[:, :n])
        states = pts[None, :, :] + ts[:, None, None] * shift[None, :, :]
        if fld.exact_radius is not None:
            # |X(t)|^2 is convex in t, so the extreme times bound the whole path
            reach = np.maximum(
                np.max(np.linalg.norm(states, axis=2), axis=0), np.linalg.norm(pts, axis=1)
            )
            escaped = reach >= fld.exact_radius
            if np.any(escaped):
                dt = min(cfg.step, cfg.T / 1000.0)
                states[:, escaped] = _rk4_trajectory(fld, pts[escaped], ts, dt)
    elif cfg.method == "linear":
        if fld.linear_map is None:
            raise UnsupportedSymbolError(
                f"{fld.label or 'this field'} has no linear Hamilton field"
            )
        states = np.stack([pts @ expm(t * fld.linear_map).T for t in ts])
    else:
        states = _rk4_trajectory(fld, pts, ts, cfg.step)
    _check_divergence(states, pts, float(np.max(np.abs(ts), initial=0.0)))
    return states


def flow(b: SymbolSpec | PhaseFunction, X: Any, t: float, cfg: FlowConfig | None = None) -> Any:
    """exp(tH_b)X; a SymbolSpec flows along Im p0. PhasePoint in, PhasePoint out."""
    fld = as_field(b)
    pts, single = as_points(X, fld.dim)
    states = trajectory(fld, pts, [t], cfg)[0]
    if isinstance(X, PhasePoint):
        return PhasePoint.from_array(states[0])
    return states[0] if single else states


def _as_values(
    a: SymbolSpec | PhaseFunction | Callable[[FloatArray], FloatArray],
) -> Callable[[FloatArray], FloatArray]:
    if isinstance(a, SymbolSpec):
        return principal_field(a, "re").value
    if isinstance(a, PhaseFunction):
        return a.value
    return a


def weighted_flow_integral(
    a: SymbolSpec | PhaseFunction | Callable[[FloatArray], FloatArray],
    b: SymbolSpec | PhaseFunction,
    points: ArrayLike,
    cfg: FlowConfig,
    kernel: Callable[[FloatArray], FloatArray] | None = None,
) -> FloatArray:
    """int_{-T}^{T} kernel(t) a(exp(tH_b)X) dt at each row X (kernel defaults to 1)."""
    fld = as_field(b)
    values_of = _as_values(a)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nodes, weights = quadrature_rule(cfg.T, cfg.panels, cfg.nodes_per_panel)
    if kernel is not None:
        weights = weights * kernel(nodes)
    states = trajectory(fld, pts, nodes, cfg)
    values = np.asarray(values_of(states.reshape(-1, fld.dim)), dtype=float).reshape(nodes.size, -1)
    return weights @ values


def time_average(
    a: SymbolSpec | PhaseFunction | Callable[[FloatArray], FloatArray],
    b: SymbolSpec | PhaseFunction,
    X: Any,
    cfg: FlowConfig | None = None,
) -> Any:
    """<a>_{b,T}(X); a SymbolSpec passed as `a` stands for Re p0, as `b` for Im p0."""
    fld = as_field(b)
    cfg = cfg or default_flow_config(fld)
    pts, single = as_points(X, fld.dim)
    avg = weighted_flow_integral(a, fld, pts, cfg) / (2.0 * cfg.T)
    return float(avg[0]) if single else avg


def quadratic_flow_matrix(qm: QuadraticModel, t: float) -> FloatArray:
    """exp(tH_{Im q}) as a matrix: expm(2 t J ImQ)."""
    return expm(2.0 * t * symplectic_matrix(qm.n) @ qm.ImQ)


def averaged_quadratic_form(qm: QuadraticModel, T: float, panels: int = 64) -> FloatArray:
    """Symmetric matrix A with <Re q>_{Im q,T}(X) = <A X, X>."""
    nodes, weights = quadrature_rule(T, panels)
    A = np.zeros((2 * qm.n, 2 * qm.n))
    for t, w in zip(nodes, weights):
        phi = quadratic_flow_matrix(qm, t)
        A += w * phi.T @ qm.ReQ @ phi
    A /= 2.0 * T
    return 0.5 * (A + A.T)


@dataclass
class DynReport:
    T: float
    quad_avg_eigmin: float
    averaged_form: list[list[float]]
    exterior_min: dict[str, float]
    exterior_witness: dict[str, list[float]]
    r_max: float
    samples: int
    quadratic_ok: bool = False
    exterior_ok: bool = False
    passed: bool = False
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def check_dyn_conditions(
    spec: SymbolSpec,
    T: float = 1.0,
    deltas: Sequence[float] = (0.25, 0.5, 1.0),
    sample_counts: int | None = None,
    r_max: float | None = None,
    threads: int = 1,
) -> DynReport:
    """
    Ellipticity of the averaged quadratic form and positivity of <Re p0>_{Im p0,T}
    on sampled annuli delta < |X| <= r_max (2 * flatten_radius by default).

    `sample_counts` is the number of grid points per phase-space axis.
    """
    qm = quadratic_model(spec)
    A = averaged_quadratic_form(qm, T)
    eigmin = float(np.min(np.linalg.eigvalsh(A)))

    r_max = r_max or (2.0 * spec.flatten_radius if spec.flatten_radius else 4.0)
    per_axis = sample_counts or (41 if spec.n == 1 else 11)
    inner = [
        shell_samples(spec.dim, 1.01 * d, 1.01 * d, radii=1, directions=32 * spec.dim)
        for d in deltas
    ]
    pts = np.vstack([box_grid(spec.dim, r_max, per_axis)] + inner)
    r = np.linalg.norm(pts, axis=1)
    pts, r = pts[r <= r_max], r[r <= r_max]

    cfg = default_flow_config(spec, T)
    averages = map_row_chunks(lambda block: time_average(spec, spec, block, cfg), pts, threads)

    exterior_min: dict[str, float] = {}
    witness: dict[str, list[float]] = {}
    for d in deltas:
        mask = r > d
        if not np.any(mask):
            continue
        k = np.flatnonzero(mask)[int(np.argmin(averages[mask]))]
        exterior_min[f"{d:g}"] = float(averages[k])
        witness[f"{d:g}"] = pts[k].tolist()

    report = DynReport(
        T=T,
        quad_avg_eigmin=eigmin,
        averaged_form=A.tolist(),
        exterior_min=exterior_min,
        exterior_witness=witness,
        r_max=float(r_max),
        samples=int(pts.shape[0]),
    )
    report.quadratic_ok = eigmin > 0
    report.exterior_ok = bool(exterior_min) and all(v > 0 for v in exterior_min.values())
    report.passed = report.quadratic_ok and report.exterior_ok
    if not report.quadratic_ok:
        report.notes.append("averaged quadratic form is not positive definite")
    logger.info(
        "Dynamical conditions at T=%s: eigmin=%.4g, exterior minima=%s, passed=%s",
        T, eigmin, exterior_min, report.passed,
    )
    return report


def check_gronwall(
    spec: SymbolSpec | PhaseFunction,
    T: float = 1.0,
    samples: int | ArrayLike = 200,
    radius: float = 5.0,
    times: int = 20,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """Fitted C_T = max |exp(tH)X - X| / (t |X|) over samples and a t-grid in (0, T]."""
    fld = as_field(spec)
    if isinstance(samples, (int, np.integer)):
        pts = ball_samples(fld.dim, int(samples), radius, seed)
    else:
        pts, _ = as_points(samples, fld.dim)
    norms = np.linalg.norm(pts, axis=1)
    pts, norms = pts[norms > 0], norms[norms > 0]
    ts = np.linspace(T / times, T, times)
    cfg = default_flow_config(fld, T)
    states = map_row_chunks(lambda block: trajectory(fld, block, ts, cfg), pts, threads, axis=1)
    moved = np.linalg.norm(states - pts[None, :, :], axis=2)
    ratio = moved / (ts[:, None] * norms[None, :])
    C_T = float(np.max(ratio))
    logger.info("Gronwall constant over %d samples, T=%s: %.4g", pts.shape[0], T, C_T)
    return C_T
