"""
The standard FBI (Bargmann) transform in one dimension.

    Tu(z) = c h^{-3/4} int exp(-(z - y)^2 / (2h)) u(y) dy,

mapping L^2(R) unitarily onto holomorphic functions with finite norm
int |Tu(z)|^2 exp(-2 Phi0(z) / h) dL(z), Phi0(z) = (Im z)^2 / 2. The
associated canonical map sends (y, eta) to z = y - i eta, so a symbol a(y, eta)
reads a(Re z, -Im z) on the Bargmann side.

Grids are laid out in units of sqrt(h), so one calibration of c serves every h.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial import hermite
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from semispec.errors import InsufficientDecayError
from semispec.init_logger import get_logger
from semispec.symbols import ScalarField

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

# u(y, h) -> samples; inputs are semiclassically scaled so they depend on h
RealLineFunction = Callable[[FloatArray, float], NDArray[np.generic]]
Samples = Union[RealLineFunction, NDArray[np.generic]]

HALF_WIDTH = 10.0
POINTS_PER_SQRT_H = 6
DECAY_TOL = 1e-14
CLOSED_FORM_NORMALIZATION = 2.0**-0.5 * math.pi**-0.75


@dataclass(frozen=True)
class BargmannGrid:
    """
    Square box |Re z|, |Im z| <= half_width with the same odd number of
    points on both axes; the real-line samples y share the Re z axis.
    """

    h: float
    half_width: float
    points: int

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.points < 5 or self.points % 2 == 0:
            raise ValueError(f"points must be odd and >= 5, got {self.points}")

    @classmethod
    def for_h(
        cls, h: float, width: float = HALF_WIDTH, per_sqrt_h: int = POINTS_PER_SQRT_H
    ) -> "BargmannGrid":
        """Box of half-width width*sqrt(h), spacing sqrt(h)/per_sqrt_h."""
        half_width = width * math.sqrt(h)
        points = 2 * int(round(width * per_sqrt_h)) + 1
        return cls(h=h, half_width=half_width, points=points)

    @property
    def y(self) -> FloatArray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    @property
    def z(self) -> ComplexArray:
        """z[i, j] = y[j] + i y[i]; rows run along Im z."""
        axis = self.y
        return axis[None, :] + 1j * axis[:, None]

    @property
    def phi0(self) -> FloatArray:
        return 0.5 * self.z.imag**2

    @property
    def weight(self) -> FloatArray:
        """exp(-2 Phi0 / h)"""
        return np.exp(-self.z.imag**2 / self.h)


def _samples(u: Samples, grid: BargmannGrid) -> NDArray[np.complex128]:
    values = u(grid.y, grid.h) if callable(u) else u
    arr = np.asarray(values, dtype=complex)
    if arr.shape != grid.y.shape:
        raise ValueError(f"expected {grid.points} samples, got shape {arr.shape}")
    peak = float(np.max(np.abs(arr)))
    edge = max(abs(arr[0]), abs(arr[-1]))
    if peak > 0 and edge > DECAY_TOL * peak:
        raise InsufficientDecayError(
            f"input does not decay at the truncation boundary y = +-{grid.half_width:.4g}",
            witness={"edge": float(edge), "peak": peak},
        )
    return arr


def real_norm(u: Samples, grid: BargmannGrid) -> float:
    samples = _samples(u, grid)
    return float(np.sqrt(trapezoid(np.abs(samples) ** 2, dx=grid.spacing)))


def _transform(
    samples: ComplexArray, grid: BargmannGrid, z: ComplexArray, c: float
) -> ComplexArray:
    kernel = np.exp(-((z.ravel()[:, None] - grid.y[None, :]) ** 2) / (2.0 * grid.h))
    values = trapezoid(kernel * samples[None, :], dx=grid.spacing, axis=1)
    return (c * grid.h**-0.75 * values).reshape(z.shape)


def _weighted_inner(F: ComplexArray, G: ComplexArray, grid: BargmannGrid) -> complex:
    integrand = F * np.conj(G) * grid.weight
    return complex(trapezoid(trapezoid(integrand, dx=grid.spacing, axis=1), dx=grid.spacing))


@lru_cache(maxsize=None)
def calibrate_normalization(
    width: float = HALF_WIDTH, per_sqrt_h: int = POINTS_PER_SQRT_H
) -> float:
    """c such that ||Tu||_Phi0 = ||u|| for the reference Gaussian exp(-y^2 / 2h) at h = 1."""
    grid = BargmannGrid.for_h(1.0, width, per_sqrt_h)
    u = np.exp(-grid.y**2 / 2.0)
    F = _transform(u.astype(complex), grid, grid.z, 1.0)
    ratio = math.sqrt(_weighted_inner(F, F, grid).real) / real_norm(u, grid)
    c = 1.0 / ratio
    drift = abs(c / CLOSED_FORM_NORMALIZATION - 1.0)
    if drift > 1e-8:
        logger.warning(
            "Calibrated FBI normalization %.12g differs from 2^-1/2 pi^-3/4 by %.2e", c, drift
        )
    else:
        logger.debug("Calibrated FBI normalization %.12g (relative drift %.2e)", c, drift)
    return c


def fbi_transform(u: Samples, h: float, grid: BargmannGrid | None = None) -> ComplexArray:
    """Tu sampled on grid.z (default grid for h)."""
    grid = grid or BargmannGrid.for_h(h)
    if grid.h != h:
        raise ValueError(f"grid built for h={grid.h}, transform requested at h={h}")
    return _transform(_samples(u, grid), grid, grid.z, calibrate_normalization())


def transform_at(u: Samples, grid: BargmannGrid, z: ArrayLike) -> ComplexArray:
    """Tu at arbitrary complex points."""
    zz = np.asarray(z, dtype=complex)
    values = _transform(_samples(u, grid), grid, np.atleast_1d(zz), calibrate_normalization())
    return values.reshape(zz.shape)


def bargmann_norm(F: ComplexArray, grid: BargmannGrid) -> float:
    return math.sqrt(max(_weighted_inner(F, F, grid).real, 0.0))


def hermite_function(k: int) -> RealLineFunction:
    """L^2-normalized (2^k k! sqrt(pi h))^{-1/2} H_k(y / sqrt h) exp(-y^2 / 2h)."""
    if k < 0:
        raise ValueError(f"Hermite index must be >= 0, got {k}")
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0

    def u(y: FloatArray, h: float) -> FloatArray:
        s = y / math.sqrt(h)
        norm = (2.0**k * math.factorial(k) * math.sqrt(math.pi * h)) ** -0.5
        return norm * hermite.hermval(s, coeffs) * np.exp(-0.5 * s**2)

    return u


def ground_state() -> RealLineFunction:
    return hermite_function(0)


def check_unitarity(u_list: Sequence[RealLineFunction], h_list: Sequence[float]) -> float:
    """max over inputs and h of | ||Tu||_Phi0 / ||u|| - 1 |."""
    worst = 0.0
    for h in h_list:
        grid = BargmannGrid.for_h(h)
        for u in u_list:
            ratio = bargmann_norm(fbi_transform(u, h, grid), grid) / real_norm(u, grid)
            worst = max(worst, abs(ratio - 1.0))
    logger.info(
        "FBI unitarity deviation %.3e over %d inputs, %d values of h",
        worst,
        len(u_list),
        len(h_list),
    )
    return worst


# ---------------------------------------------------------------------------
# Quantization-multiplication
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylSymbol:
    """a(x, xi) = potential(x) + |xi|^2 (the kinetic term only when `kinetic`)."""

    potential: ScalarField
    kinetic: bool = False
    label: str = "a"

    def __post_init__(self) -> None:
        if self.potential.dim != 1:
            raise ValueError(
                f"real-line symbols need a one-dimensional potential, got dim {self.potential.dim}"
            )

    @classmethod
    def constant(cls, value: float = 1.0) -> "WeylSymbol":
        return cls(ScalarField.polynomial({(0,): value}), label=f"{value:g}")

    @classmethod
    def x_squared(cls) -> "WeylSymbol":
        return cls(ScalarField.polynomial({(2,): 1.0}), label="x^2")

    @classmethod
    def harmonic(cls) -> "WeylSymbol":
        return cls(ScalarField.polynomial({(2,): 1.0}), kinetic=True, label="x^2+xi^2")

    def quantize(self, samples: ComplexArray, grid: BargmannGrid) -> ComplexArray:
        """a^w u on the real-line grid; -h^2 u'' spectrally."""
        out = self.potential.value(grid.y[:, None]) * samples
        if self.kinetic:
            k = 2.0 * np.pi * np.fft.fftfreq(grid.points, d=grid.spacing)
            out = out + grid.h**2 * np.fft.ifft(k**2 * np.fft.fft(samples))
        return out

    def on_bargmann_side(self, z: ComplexArray) -> ComplexArray:
        """a(Re z, -Im z)"""
        values = self.potential.value(z.real.reshape(-1, 1)).reshape(z.shape)
        if self.kinetic:
            values = values + z.imag**2
        return values


def quant_mult_residuals(
    a: WeylSymbol, u: RealLineFunction | None, h_list: Sequence[float]
) -> FloatArray:
    """
    |<T(a^w u), Tu>_Phi0 - int a(Re z, -Im z) |Tu|^2 e^{-2 Phi0/h}| per h, relative to ||u||^2.
    """
    u = u or ground_state()
    out = []
    for h in h_list:
        grid = BargmannGrid.for_h(h)
        samples = _samples(u, grid)
        Tu = fbi_transform(samples, h, grid)
        Tau = _transform(a.quantize(samples, grid), grid, grid.z, calibrate_normalization())
        lhs = _weighted_inner(Tau, Tu, grid)
        rhs = _weighted_inner(a.on_bargmann_side(grid.z) * Tu, Tu, grid)
        out.append(abs(lhs - rhs) / real_norm(samples, grid) ** 2)
    return np.asarray(out)


def quant_mult_check(
    a: WeylSymbol, u: RealLineFunction | None, h_list: Sequence[float], floor: float = 1e-12
) -> float:
    """
    Log-log slope of the quantization-multiplication residual against h.

    nan when every residual is below floor.
    """
    residuals = quant_mult_residuals(a, u, h_list)
    keep = residuals > floor
    if np.count_nonzero(keep) < 2:
        logger.info("Quantization residuals for %s below %.1e; slope undefined", a.label, floor)
        return float("nan")
    slope = float(np.polyfit(np.log(np.asarray(h_list)[keep]), np.log(residuals[keep]), 1)[0])
    logger.info("Quantization residual slope for %s: %.3f", a.label, slope)
    return slope


def cauchy_riemann_residual(u: Samples, h: float, grid: BargmannGrid | None = None) -> float:
    """
    max |d/dzbar Tu| / max |d/dz Tu| over the central half of the box, both
    weighted by exp(-Phi0/h), from centred differences with step 1e-3 sqrt(h).
    """
    grid = grid or BargmannGrid.for_h(h)
    quarter = grid.points // 4
    centre = grid.z[quarter : grid.points - quarter : 2, quarter : grid.points - quarter : 2]
    delta = 1e-3 * math.sqrt(h)
    samples = _samples(u, grid)
    c = calibrate_normalization()

    def at(z: ComplexArray) -> ComplexArray:
        return _transform(samples, grid, z, c)

    dx = (at(centre + delta) - at(centre - delta)) / (2.0 * delta)
    dy = (at(centre + 1j * delta) - at(centre - 1j * delta)) / (2.0 * delta)
    damp = np.exp(-0.5 * centre.imag**2 / h)
    dzbar = 0.5 * (dx + 1j * dy) * damp
    dz = 0.5 * (dx - 1j * dy) * damp
    return float(np.max(np.abs(dzbar)) / np.max(np.abs(dz)))


# ---------------------------------------------------------------------------
# Combined report
# ---------------------------------------------------------------------------


@dataclass
class FbiReport:
    h_list: list[float]
    normalization: float
    unitarity_deviation: float
    unitarity_tol: float
    quant_mult_slopes: dict[str, float]
    quant_mult_residuals: dict[str, list[float]]
    slope_floor: float
    cauchy_riemann: float
    passed: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def fbi_verify(
    h_list: Sequence[float],
    hermite_max: int = 5,
    unitarity_tol: float = 1e-5,
    slope_floor: float = 0.9,
) -> FbiReport:
    """Unitarity on Hermite inputs, quantization-multiplication slopes for x^2 and x^2 + xi^2."""
    hs = [float(h) for h in h_list]
    if len(hs) < 2 or any(h <= 0 for h in hs):
        raise ValueError(f"need at least two positive values of h, got {hs}")
    deviation = check_unitarity([hermite_function(k) for k in range(hermite_max + 1)], hs)
    slopes: dict[str, float] = {}
    residuals: dict[str, list[float]] = {}
    for a in (WeylSymbol.x_squared(), WeylSymbol.harmonic()):
        residuals[a.label] = quant_mult_residuals(a, None, hs).tolist()
        slopes[a.label] = quant_mult_check(a, None, hs)
    cr = cauchy_riemann_residual(ground_state(), hs[-1])
    notes = []
    if deviation > unitarity_tol:
        notes.append(f"unitarity deviation {deviation:.3e} exceeds {unitarity_tol:g}")
    for label, slope in slopes.items():
        if not slope >= slope_floor:
            notes.append(f"residual slope for {label} is {slope:.3f} < {slope_floor}")
    return FbiReport(
        h_list=hs,
        normalization=calibrate_normalization(),
        unitarity_deviation=deviation,
        unitarity_tol=unitarity_tol,
        quant_mult_slopes=slopes,
        quant_mult_residuals=residuals,
        slope_floor=slope_floor,
        cauchy_riemann=cr,
        passed=not notes,
        notes=notes,
    )
