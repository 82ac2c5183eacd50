"""
Weight functions that turn averaged ellipticity into pointwise ellipticity.

Pipeline for a spec p0 and parameters (epsilon, delta, T):

1. modified symbol  m_eps = chi0 g(|X|^2/eps) Re p0 + eps (1 - chi0) Re p0
2. weight           G_eps(X) = int J(t/T) m_eps(exp(tH_{Im p0})X) dt
3. cohomology       H_{Im p0} G_eps = <m_eps>_{Im p0,T} - m_eps
4. deformation      Re p0~(X + i delta H_{G_eps}(X)) sampled on four radial regions

G0 is the same construction for the quadratic model with m = Re q.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from semispec.cutoffs import bridge, decay_profile
from semispec.dynamics import (
    FlowConfig,
    default_flow_config,
    quadratic_flow_matrix,
    quadrature_rule,
    trajectory,
    weighted_flow_integral,
)
from semispec.errors import SemispecError
from semispec.init_logger import get_logger
from semispec.parallel import map_row_chunks, parallel_map
from semispec.quadmodel import QuadraticModel, quadratic_model
from semispec.symbols import (
    SymbolSpec,
    as_points,
    ball_samples,
    complex_extension,
    principal_field,
    sphere_directions,
)

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]

FD_STEP = 1e-4
REGIONS = ("local", "transition", "intermediate", "exterior")


@dataclass(frozen=True)
class WeightParams:
    epsilon: float = 0.01
    delta: float = 0.1
    T: float = 1.0
    A: float = 1.0
    chi0_radius: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 < self.delta <= 0.5:
            raise ValueError(f"delta must lie in (0, 0.5], got {self.delta}")
        for label in ("T", "A", "chi0_radius"):
            if not getattr(self, label) > 0:
                raise ValueError(f"{label} must be positive, got {getattr(self, label)}")

    @classmethod
    def from_h(cls, h: float, A: float = 1.0, **kwargs: float) -> "WeightParams":
        """Couple epsilon = A h."""
        return cls(epsilon=A * h, A=A, **kwargs)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def g_profile(t: ArrayLike) -> Any:
    """1 on [0, 1], 1/t on [2, inf), smooth decreasing bridge in between."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("g_profile is defined for t >= 0 only")
    out = decay_profile(arr)
    return float(out) if out.ndim == 0 else out


def j_profile(t: ArrayLike) -> Any:
    """
    J(t) = -(1+t)/2 on (-1, 0), (1-t)/2 on (0, 1), 0 for |t| >= 1.

    J' = delta_0 - 1/2 on [-1, 1].
    """
    arr = np.asarray(t, dtype=float)
    out = np.where(
        (arr > -1) & (arr < 0),
        -(1.0 + arr) / 2.0,
        np.where((arr > 0) & (arr < 1), (1.0 - arr) / 2.0, 0.0),
    )
    return float(out) if out.ndim == 0 else out


class ModifiedSymbol:
    """Callable m_eps on stacked phase points."""

    def __init__(self, spec: SymbolSpec, params: WeightParams) -> None:
        self.spec = spec
        self.params = params
        self._re = principal_field(spec, "re")

    def __call__(self, points: ArrayLike) -> FloatArray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        re = self._re.value(pts)
        r2 = np.sum(pts**2, axis=1)
        chi0 = bridge(np.sqrt(r2), self.params.chi0_radius, 2.0 * self.params.chi0_radius)[0]
        g = decay_profile(r2 / self.params.epsilon)
        return chi0 * g * re + self.params.epsilon * (1.0 - chi0) * re


def modified_symbol(spec: SymbolSpec, params: WeightParams, X: Any) -> Any:
    pts, single = as_points(X, spec.dim)
    values = ModifiedSymbol(spec, params)(pts)
    return float(values[0]) if single else values


def _flow_config(spec: SymbolSpec, params: WeightParams, panels: int) -> FlowConfig:
    return default_flow_config(spec, params.T, panels)


def _weight_values(
    spec: SymbolSpec, params: WeightParams, pts: FloatArray, panels: int
) -> FloatArray:
    cfg = _flow_config(spec, params, panels)
    return weighted_flow_integral(
        ModifiedSymbol(spec, params), spec, pts, cfg, kernel=lambda t: j_profile(t / params.T)
    )


def weight_G(spec: SymbolSpec, params: WeightParams, X: Any, panels: int = 64) -> Any:
    """G_eps(X) by composite Gauss-Legendre quadrature over [-T, T]."""
    pts, single = as_points(X, spec.dim)
    values = _weight_values(spec, params, pts, panels)
    return float(values[0]) if single else values


def weight_G0(qm: QuadraticModel, T: float, X: Any, panels: int = 64) -> Any:
    """int J(t/T) Re q(exp(tH_{Im q})X) dt along the exact linear flow."""
    pts, single = as_points(X, 2 * qm.n)
    cfg = FlowConfig(method="linear", dt=T / 1000.0, T=T, panels=panels)
    values = weighted_flow_integral(
        qm.re_field(), qm.im_field(), pts, cfg, kernel=lambda t: j_profile(t / T)
    )
    return float(values[0]) if single else values


def _offsets(dim: int, step: float) -> FloatArray:
    return step * np.vstack([np.eye(dim), -np.eye(dim)])


def weight_gradient(
    spec: SymbolSpec,
    params: WeightParams,
    points: ArrayLike,
    step: float = FD_STEP,
    panels: int = 64,
) -> FloatArray:
    """Central-difference gradient of G_eps at stacked points, shape (m, 2n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = pts.shape[1]
    shifted = (pts[:, None, :] + _offsets(dim, step)[None, :, :]).reshape(-1, dim)
    values = _weight_values(spec, params, shifted, panels).reshape(pts.shape[0], 2, dim)
    return (values[:, 0, :] - values[:, 1, :]) / (2.0 * step)


def weight_hessian(
    spec: SymbolSpec, params: WeightParams, points: ArrayLike, step: float, panels: int = 64
) -> FloatArray:
    """Central-difference Hessian of G_eps at stacked points, shape (m, 2n, 2n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m, dim = pts.shape
    eye = np.eye(dim) * step
    pairs = [(k, l) for k in range(dim) for l in range(k, dim)]
    signs = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    shifts = np.array([sk * eye[k] + sl * eye[l] for k, l in pairs for sk, sl in signs])
    values = _weight_values(spec, params, (pts[:, None, :] + shifts[None]).reshape(-1, dim), panels)
    values = values.reshape(m, len(pairs), 4)
    second = (values[..., 0] - values[..., 1] - values[..., 2] + values[..., 3]) / (4.0 * step**2)
    hess = np.zeros((m, dim, dim))
    for i, (k, l) in enumerate(pairs):
        hess[:, k, l] = hess[:, l, k] = second[:, i]
    return hess


def weight_hamilton_field(
    spec: SymbolSpec,
    params: WeightParams,
    points: ArrayLike,
    step: float = FD_STEP,
    panels: int = 64,
) -> FloatArray:
    """H_{G_eps} = (d_xi G, -d_x G)."""
    grad = weight_gradient(spec, params, points, step, panels)
    n = spec.n
    return np.concatenate([grad[:, n:], -grad[:, :n]], axis=1)


def verify_cohomology(
    spec: SymbolSpec,
    params: WeightParams,
    samples: int | ArrayLike = 50,
    step: float = FD_STEP,
    panels: int = 128,
    radius: float = 1.0,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """max |d/ds G_eps(exp(sH)X)|_{s=0} - (<m_eps>_T - m_eps)(X)| over the samples."""
    if isinstance(samples, (int, np.integer)):
        pts = ball_samples(spec.dim, int(samples), radius, seed)
    else:
        pts, _ = as_points(samples, spec.dim)
    generator = principal_field(spec, "im")
    cfg = _flow_config(spec, params, panels)
    modified = ModifiedSymbol(spec, params)

    def block_residual(block: FloatArray) -> FloatArray:
        ends = trajectory(generator, block, [step, -step], cfg)
        forward = _weight_values(spec, params, ends[0], panels)
        backward = _weight_values(spec, params, ends[1], panels)
        lhs = (forward - backward) / (2.0 * step)
        average = weighted_flow_integral(modified, generator, block, cfg) / (2.0 * params.T)
        return np.abs(lhs - (average - modified(block)))

    residual = float(np.max(map_row_chunks(block_residual, pts, threads)))
    logger.info(
        "Cohomology residual over %d samples (eps=%g): %.3e", pts.shape[0], params.epsilon, residual
    )
    return residual


def deformed_real_part(
    spec: SymbolSpec, params: WeightParams, X: Any, step: float = FD_STEP
) -> Any:
    """Re p0~(X + i delta H_{G_eps}(X)) with the exact polynomial extension of p0."""
    pts, single = as_points(X, spec.dim)
    H = weight_hamilton_field(spec, params, pts, step)
    values = complex_extension(spec, pts + 1j * params.delta * H).real
    return float(values[0]) if single else values


@dataclass(frozen=True)
class SamplePlan:
    """Radial sampling of the four ellipticity regions, split at |X|^2 = eps/C, C eps, 1/C."""

    region_constant: float = 4.0
    radii_per_region: int = 12
    directions: int = 32
    r_max: float | None = None
    seed: int = 0

    def bounds(self, epsilon: float, r_max: float) -> dict[str, tuple[float, float]]:
        C = self.region_constant
        if C * epsilon >= 1.0 / C:
            raise ValueError(
                f"epsilon={epsilon} too large for region constant {C}: regions overlap"
            )
        local_hi = np.sqrt(epsilon / C)
        return {
            "local": (0.05 * local_hi, local_hi),
            "transition": (local_hi, np.sqrt(C * epsilon)),
            "intermediate": (np.sqrt(C * epsilon), np.sqrt(1.0 / C)),
            "exterior": (np.sqrt(1.0 / C), r_max),
        }

    def points(self, dim: int, lo: float, hi: float) -> FloatArray:
        radii = np.geomspace(lo, hi, self.radii_per_region)
        dirs = sphere_directions(dim, self.directions, self.seed)
        return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


@dataclass
class RegionResult:
    tag: str
    r_min: float
    r_max: float
    samples: int
    minimum: float
    fitted_C: float
    passed: bool
    witness: list[float] | None = None


@dataclass
class EllipticityReport:
    params: dict[str, float]
    regions: list[RegionResult]
    passed: bool
    averaged_ratio_floor: float | None = None
    cohomology_residual: float | None = None
    notes: list[str] = field(default_factory=list)

    def region(self, tag: str) -> RegionResult:
        return next(r for r in self.regions if r.tag == tag)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def averaged_ratio_floor(
    qm: QuadraticModel, T: float, directions: int = 256, panels: int = 64
) -> float:
    """min over |X| = 1 of the time average of Re q / |X|^2 along the flow of Im q."""
    dirs = sphere_directions(2 * qm.n, directions)
    nodes, weights = quadrature_rule(T, panels)
    total = np.zeros(dirs.shape[0])
    for t, w in zip(nodes, weights):
        moved = dirs @ quadratic_flow_matrix(qm, t).T
        ratio = np.einsum("mk,kl,ml->m", moved, qm.ReQ, moved) / np.sum(moved**2, axis=1)
        total += w * ratio
    return float(np.min(total / (2.0 * T)))


def verify_ellipticity(
    spec: SymbolSpec, params: WeightParams, sample_plan: SamplePlan | None = None, threads: int = 1
) -> EllipticityReport:
    """
    Sample Re p0~(X + i delta H_{G_eps}(X)) on the four radial regions.

    Fitted constants: delta |X|^2 / C for the local and transition regions,
    delta eps / C beyond. A region passes iff its sampled minimum is positive.
    Regions are independent and run on up to `threads` workers.
    """
    plan = sample_plan or SamplePlan()
    r_max = plan.r_max or (2.0 * spec.flatten_radius if spec.flatten_radius else 2.0)

    def check_region(item: tuple[str, tuple[float, float]]) -> RegionResult:
        tag, (lo, hi) = item
        pts = plan.points(spec.dim, lo, hi)
        values = deformed_real_part(spec, params, pts)
        r2 = np.sum(pts**2, axis=1)
        scale = params.delta * (r2 if tag in ("local", "transition") else params.epsilon)
        with np.errstate(divide="ignore"):
            ratios = np.where(values > 0, scale / np.where(values > 0, values, 1.0), np.inf)
        worst = int(np.argmin(values))
        passed = bool(values[worst] > 0)
        logger.debug("Region %s: min=%.4g fitted C=%.4g", tag, values[worst], np.max(ratios))
        return RegionResult(
            tag=tag,
            r_min=float(lo),
            r_max=float(hi),
            samples=int(pts.shape[0]),
            minimum=float(values[worst]),
            fitted_C=float(np.max(ratios)),
            passed=passed,
            witness=None if passed else pts[worst].tolist(),
        )

    results = parallel_map(check_region, plan.bounds(params.epsilon, r_max).items(), threads)

    report = EllipticityReport(
        params=params.to_dict(), regions=results, passed=all(r.passed for r in results)
    )
    try:
        report.averaged_ratio_floor = averaged_ratio_floor(quadratic_model(spec), params.T)
    except SemispecError as exc:
        report.notes.append(f"averaged ratio floor unavailable: {exc}")
    logger.info(
        "Ellipticity check (eps=%g, delta=%g): passed=%s",
        params.epsilon,
        params.delta,
        report.passed,
    )
    return report


@dataclass
class WeightScaling:
    epsilons: list[float]
    sup_value: list[float]
    sup_gradient: list[float]
    sup_hessian: list[float]
    exponents: list[float]
    constants: list[float]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def fit_weight_scaling(
    spec: SymbolSpec,
    params: WeightParams,
    eps_list: Sequence[float] = (1e-2, 1e-3, 1e-4),
    radii: int = 16,
    directions: int = 16,
) -> WeightScaling:
    """
    Log-log exponents of sup|G|, sup|dG|, sup|d2G| against eps (expected 1, 1/2, 0).

    Samples sit on spheres with radii from 0.1 sqrt(eps) to min(10 sqrt(eps), 1),
    where the derivative bounds are attained. Constants are the single C making
    sup|d^k G| <= C eps^{1 - k/2} hold for every eps in the list.
    """
    sup_value, sup_grad, sup_hess = [], [], []
    dirs = sphere_directions(spec.dim, directions)
    for eps in eps_list:
        p = replace(params, epsilon=eps)
        root = np.sqrt(eps)
        rs = np.geomspace(0.1 * root, min(10.0 * root, 1.0), radii)
        pts = (rs[:, None, None] * dirs[None]).reshape(-1, spec.dim)
        step = 0.01 * root
        sup_value.append(float(np.max(np.abs(weight_G(spec, p, pts)))))
        sup_grad.append(float(np.max(np.linalg.norm(weight_gradient(spec, p, pts, step), axis=1))))
        hess = weight_hessian(spec, p, pts, step)
        sup_hess.append(float(np.max(np.linalg.norm(hess, ord=2, axis=(1, 2)))))
    log_eps = np.log(np.asarray(eps_list))
    exponents = [
        float(np.polyfit(log_eps, np.log(s), 1)[0]) for s in (sup_value, sup_grad, sup_hess)
    ]
    eps_arr = np.asarray(eps_list)
    constants = [
        float(np.max(np.asarray(s) / eps_arr ** (1.0 - k / 2.0)))
        for k, s in enumerate((sup_value, sup_grad, sup_hess))
    ]
    logger.info("Weight scaling exponents %s", exponents)
    return WeightScaling(
        epsilons=list(map(float, eps_list)),
        sup_value=sup_value,
        sup_gradient=sup_grad,
        sup_hessian=sup_hess,
        exponents=exponents,
        constants=constants,
    )


@dataclass
class ExpansionFit:
    """Fit of sup_{|X| = r} |G_eps(X) - G0(X)| against r near the origin."""

    radii: list[float]
    differences: list[float]
    slope: float | None
    exact: bool
    min_slope: float = 2.7

    @property
    def passed(self) -> bool:
        return self.exact or (self.slope is not None and self.slope >= self.min_slope)

    def to_json(self) -> str:
        return json.dumps({**asdict(self), "passed": self.passed}, indent=2, sort_keys=True)


def expansion_slope(
    spec: SymbolSpec,
    params: WeightParams,
    radii: Sequence[float] = tuple(np.geomspace(1e-3, 1e-1, 7)),
    directions: int = 8,
    floor: float = 1e-14,
) -> ExpansionFit:
    """
    Log-log slope of sup_{|X| = r} |G_eps(X) - G0(X)| against r.

    Differences below `floor` are numerical noise. When every difference is
    below it the two weights agree to rounding and the fit is marked exact,
    with no slope.
    """
    qm = quadratic_model(spec)
    dirs = sphere_directions(spec.dim, directions)
    diffs = []
    for r in radii:
        pts = r * dirs
        diff = weight_G(spec, params, pts) - weight_G0(qm, params.T, pts)
        diffs.append(float(np.max(np.abs(diff))))
    above = [(r, d) for r, d in zip(radii, diffs) if d > floor]
    fit = ExpansionFit(
        radii=[float(r) for r in radii], differences=diffs, slope=None, exact=not above
    )
    if len(above) >= 2:
        rs, ds = zip(*above)
        fit.slope = float(np.polyfit(np.log(rs), np.log(ds), 1)[0])
    logger.info("Expansion fit: exact=%s slope=%s", fit.exact, fit.slope)
    return fit
