"""
Symbols p(x, xi; h) = p0 + h p1 on phase space R^{2n}.

Scalar fields are either exact polynomials (multi-index -> coefficient) or
named catalog entries with closed-form derivatives up to order two. A
SymbolSpec combines them either in Schroedinger form |xi|^2 + V(x) + iW(x) or
as a general principal symbol p0(x, xi). Phase points are ordered
X = (x_1..x_n, xi_1..xi_n) everywhere in the package.

Besides evaluation this module hosts the sampled checks of the standing
assumptions (positivity, ellipticity at infinity, isolated critical set,
bounded second derivatives, control of Im p0 by 1 + Re p0).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from semispec.cutoffs import flat_exp, radial_cutoff
from semispec.errors import (
    ConfigError,
    DimensionMismatchError,
    EllipticityError,
    UnsupportedSymbolError,
)
from semispec.init_logger import get_logger

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]
Jet = tuple[ComplexArray, "ComplexArray | None", "ComplexArray | None"]

FORMS = ("schrodinger", "general")
TUBE_WIDTH = 0.5
CRITICAL_TOL = 1e-8
CRITICAL_EXCLUSION = 1e-3


# ---------------------------------------------------------------------------
# Phase points and sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhasePoint:
    """X = (x, xi) in R^{2n}."""

    x: tuple[float, ...]
    xi: tuple[float, ...]

    def __post_init__(self) -> None:
        x = tuple(float(v) for v in np.atleast_1d(np.asarray(self.x, dtype=float)))
        xi = tuple(float(v) for v in np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if not x or len(x) != len(xi):
            raise DimensionMismatchError(
                f"position and momentum lengths differ or are empty: {len(x)} vs {len(xi)}"
            )
        if not np.all(np.isfinite(x + xi)):
            raise ValueError(f"phase point has non-finite entries: {x}, {xi}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return len(self.x)

    def as_array(self) -> FloatArray:
        return np.array(self.x + self.xi, dtype=float)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    @classmethod
    def from_array(cls, values: ArrayLike) -> "PhasePoint":
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0 or arr.size % 2:
            raise DimensionMismatchError(
                f"phase point needs an even, positive length, got {arr.size}"
            )
        n = arr.size // 2
        return cls(tuple(arr[:n]), tuple(arr[n:]))


def as_points(points: Any, dim: int) -> tuple[FloatArray, bool]:
    """Stack a PhasePoint, a single vector or an (m, dim) array; report whether input was single."""
    if isinstance(points, PhasePoint):
        points = points.as_array()
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(
            f"expected points of dimension {dim}, got shape {np.shape(points)}",
            witness=list(np.shape(points)),
        )
    return arr, single


def symplectic_matrix(n: int) -> FloatArray:
    """J = [[0, I], [-I, 0]], so that H_b = J grad b."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def sphere_directions(dim: int, count: int, seed: int = 0) -> FloatArray:
    """Deterministic unit vectors: the +-axis directions followed by seeded random ones."""
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    extra = max(count - axes.shape[0], 0)
    rng = np.random.default_rng(seed)
    rand = rng.normal(size=(extra, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([axes, rand])[: max(count, axes.shape[0])]


def ball_samples(dim: int, count: int, radius: float, seed: int = 0) -> FloatArray:
    """Seeded uniform samples of the closed ball |X| <= radius."""
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=count) ** (1.0 / dim)
    return directions * radii[:, None]


def shell_samples(
    dim: int, inner: float, outer: float, radii: int = 9, directions: int = 256, seed: int = 0
) -> FloatArray:
    """Points on `radii` spheres between inner and outer (inclusive)."""
    dirs = sphere_directions(dim, directions, seed)
    rs = np.linspace(inner, outer, radii)
    return (rs[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def box_grid(dim: int, radius: float, points_per_axis: int) -> FloatArray:
    """Tensor grid on [-radius, radius]^dim."""
    axis = np.linspace(-radius, radius, points_per_axis)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    defaults: tuple[tuple[str, float], ...]
    jet: Callable[[FloatArray, Mapping[str, float]], tuple[FloatArray, FloatArray, FloatArray]]
    bounded_hessian: bool


def _flat_well_jet(
    x: FloatArray, params: Mapping[str, float]
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """amplitude * theta(|x|^2 - radius^2), theta(s) = exp(-1/s) for s > 0."""
    radius = params["radius"]
    amplitude = params["amplitude"]
    s = np.sum(x**2, axis=1) - radius**2
    th, th1, th2 = flat_exp(s)
    dim = x.shape[1]
    value = amplitude * th
    grad = amplitude * 2.0 * x * th1[:, None]
    outer = x[:, :, None] * x[:, None, :]
    hess = amplitude * (
        4.0 * th2[:, None, None] * outer + 2.0 * th1[:, None, None] * np.eye(dim)[None]
    )
    return value, grad, hess


CATALOG: dict[str, CatalogEntry] = {
    "flat_well": CatalogEntry(
        name="flat_well",
        defaults=(("radius", 1.0), ("amplitude", 1.0)),
        jet=_flat_well_jet,
        bounded_hessian=True,
    ),
}


def _poly_eval(exps: NDArray[np.int64], coeffs: ComplexArray, pts: NDArray[Any]) -> ComplexArray:
    if exps.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=complex)
    monomials = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
    return monomials @ coeffs


def _poly_derivative(
    exps: NDArray[np.int64], coeffs: ComplexArray, k: int
) -> tuple[NDArray[np.int64], ComplexArray]:
    new_coeffs = coeffs * exps[:, k]
    new_exps = exps.copy()
    new_exps[:, k] = np.maximum(new_exps[:, k] - 1, 0)
    keep = new_coeffs != 0
    return new_exps[keep], new_coeffs[keep]


@dataclass(frozen=True)
class ScalarField:
    """
    A scalar field on R^dim.

    Polynomial fields keep their exact coefficient list as
    ((powers, coefficient), ...); catalog fields keep a name and parameters.
    """

    dim: int
    terms: tuple[tuple[tuple[int, ...], complex], ...] = ()
    catalog: str | None = None
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"field dimension must be >= 1, got {self.dim}")
        if self.catalog is not None:
            if self.catalog not in CATALOG:
                raise UnsupportedSymbolError(f"unknown catalog field {self.catalog!r}")
            if self.terms:
                raise ValueError("catalog fields carry no polynomial terms")
        for powers, _ in self.terms:
            if len(powers) != self.dim or any(p < 0 for p in powers):
                raise ValueError(f"invalid multi-index {powers} for dimension {self.dim}")

    # construction -------------------------------------------------------

    @classmethod
    def polynomial(
        cls,
        terms: Mapping[Sequence[int], complex] | Iterable[tuple[Sequence[int], complex]],
        dim: int | None = None,
    ) -> "ScalarField":
        items = list(terms.items()) if isinstance(terms, Mapping) else list(terms)
        merged: dict[tuple[int, ...], complex] = {}
        for powers, coeff in items:
            key = tuple(int(p) for p in np.atleast_1d(powers))
            merged[key] = merged.get(key, 0j) + complex(coeff)
        if dim is None:
            if not merged:
                raise ValueError("dimension required for the zero polynomial")
            dim = len(next(iter(merged)))
        cleaned = tuple(sorted((k, v) for k, v in merged.items() if v != 0))
        return cls(dim=dim, terms=cleaned)

    @classmethod
    def zero(cls, dim: int) -> "ScalarField":
        return cls(dim=dim)

    @classmethod
    def from_catalog(cls, name: str, dim: int = 1, **params: float) -> "ScalarField":
        if name not in CATALOG:
            raise UnsupportedSymbolError(f"unknown catalog field {name!r}")
        merged = dict(CATALOG[name].defaults)
        unknown = set(params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
        merged.update({k: float(v) for k, v in params.items()})
        return cls(dim=dim, catalog=name, params=tuple(sorted(merged.items())))

    # properties ---------------------------------------------------------

    @property
    def is_polynomial(self) -> bool:
        return self.catalog is None

    @property
    def degree(self) -> int | None:
        """Total degree for polynomials (-1 for zero), None for catalog entries."""
        if not self.is_polynomial:
            return None
        return max((sum(p) for p, _ in self.terms), default=-1)

    @property
    def is_real(self) -> bool:
        return all(complex(c).imag == 0 for _, c in self.terms)

    @property
    def bounded_hessian(self) -> bool:
        if self.is_polynomial:
            return (self.degree or 0) <= 2
        return CATALOG[self.catalog].bounded_hessian  # type: ignore[index]

    def _arrays(self) -> tuple[NDArray[np.int64], ComplexArray]:
        exps = np.array([p for p, _ in self.terms], dtype=np.int64).reshape(-1, self.dim)
        coeffs = np.array([c for _, c in self.terms], dtype=complex)
        return exps, coeffs

    # evaluation ---------------------------------------------------------

    def jet(self, points: ArrayLike, order: int = 2) -> Jet:
        """Value, gradient and Hessian (up to `order`) at the rows of `points`."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"field of dimension {self.dim} evaluated on points of dimension {pts.shape[1]}"
            )
        if not self.is_polynomial:
            entry = CATALOG[self.catalog]  # type: ignore[index]
            value, grad, hess = entry.jet(pts, dict(self.params))
            return (
                value.astype(complex),
                grad.astype(complex) if order >= 1 else None,
                hess.astype(complex) if order >= 2 else None,
            )
        exps, coeffs = self._arrays()
        value = _poly_eval(exps, coeffs, pts)
        grad = hess = None
        if order >= 1:
            grad = np.zeros((pts.shape[0], self.dim), dtype=complex)
            firsts = [_poly_derivative(exps, coeffs, k) for k in range(self.dim)]
            for k, (e1, c1) in enumerate(firsts):
                grad[:, k] = _poly_eval(e1, c1, pts)
            if order >= 2:
                hess = np.zeros((pts.shape[0], self.dim, self.dim), dtype=complex)
                for k, (e1, c1) in enumerate(firsts):
                    for l in range(k, self.dim):
                        e2, c2 = _poly_derivative(e1, c1, l)
                        hess[:, k, l] = hess[:, l, k] = _poly_eval(e2, c2, pts)
        return value, grad, hess

    def value(self, points: ArrayLike) -> ComplexArray:
        return self.jet(points, 0)[0]

    def value_complex(self, points: ArrayLike) -> ComplexArray:
        """Entire extension of a polynomial field to complex arguments."""
        if not self.is_polynomial:
            raise UnsupportedSymbolError(
                f"catalog field {self.catalog!r} has no exact complex extension"
            )
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        exps, coeffs = self._arrays()
        return _poly_eval(exps, coeffs, pts)

    def taylor_extension(self, points: ComplexArray) -> ComplexArray:
        """Second-order jet f(X) + i f'(X)Y - Y.f''(X)Y/2 at Z = X + iY."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        value, grad, hess = self.jet(pts.real, 2)
        y = pts.imag
        return value + 1j * np.einsum("mk,mk->m", grad, y) - 0.5 * np.einsum(
            "mk,mkl,ml->m", y, hess, y
        )

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        if not self.is_polynomial:
            return {
                "kind": "catalog",
                "name": self.catalog,
                "dim": self.dim,
                "params": dict(self.params),
            }
        return {
            "kind": "polynomial",
            "dim": self.dim,
            "terms": [{"powers": list(p), "coeff": _encode_complex(c)} for p, c in self.terms],
        }

    @classmethod
    def from_dict(cls, data: Any, pointer: str = "field") -> "ScalarField":
        if not isinstance(data, Mapping):
            raise ConfigError(pointer, "expected an object")
        kind = data.get("kind")
        dim = data.get("dim", 1)
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ConfigError(f"{pointer}.dim", f"expected a positive integer, got {dim!r}")
        if kind == "catalog":
            name = data.get("name")
            if name not in CATALOG:
                raise ConfigError(f"{pointer}.name", f"unknown catalog field {name!r}")
            params = data.get("params", {})
            if not isinstance(params, Mapping):
                raise ConfigError(f"{pointer}.params", "expected an object")
            try:
                return cls.from_catalog(name, dim, **params)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{pointer}.params", str(exc)) from exc
        if kind == "polynomial":
            raw_terms = data.get("terms", [])
            if not isinstance(raw_terms, list):
                raise ConfigError(f"{pointer}.terms", "expected a list")
            terms: list[tuple[tuple[int, ...], complex]] = []
            for i, term in enumerate(raw_terms):
                where = f"{pointer}.terms[{i}]"
                if not isinstance(term, Mapping):
                    raise ConfigError(where, "expected an object with 'powers' and 'coeff'")
                powers = term.get("powers")
                if (
                    not isinstance(powers, list)
                    or len(powers) != dim
                    or not all(
                        isinstance(p, int) and not isinstance(p, bool) and p >= 0 for p in powers
                    )
                ):
                    raise ConfigError(f"{where}.powers", f"expected {dim} non-negative integers")
                terms.append((tuple(powers), _decode_complex(term.get("coeff"), f"{where}.coeff")))
            return cls.polynomial(terms, dim=dim)
        raise ConfigError(f"{pointer}.kind", f"expected 'polynomial' or 'catalog', got {kind!r}")


def _encode_complex(value: complex) -> float | list[float]:
    value = complex(value)
    return value.real if value.imag == 0 else [value.real, value.imag]


def _decode_complex(raw: Any, pointer: str) -> complex:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return complex(float(raw))
    if (
        isinstance(raw, list)
        and len(raw) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw)
    ):
        return complex(float(raw[0]), float(raw[1]))
    raise ConfigError(pointer, f"expected a number or [re, im], got {raw!r}")


# ---------------------------------------------------------------------------
# Symbol specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolSpec:
    """p = p0 + h p1 in Schroedinger form (V, W) or general form (p0 on R^{2n})."""

    n: int
    form: str
    V: ScalarField | None = None
    W: ScalarField | None = None
    p0: ScalarField | None = None
    p1: ScalarField | None = None
    flatten_radius: float | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"dimension n must be >= 1, got {self.n}")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.form == "schrodinger":
            if self.V is None or self.W is None or self.p0 is not None:
                raise ValueError("Schroedinger form needs V and W and no p0")
            for label, fld in (("V", self.V), ("W", self.W)):
                if fld.dim != self.n:
                    raise DimensionMismatchError(
                        f"{label} has dimension {fld.dim}, expected {self.n}"
                    )
                if not fld.is_real:
                    raise ValueError(f"{label} must be real-valued")
        else:
            if self.p0 is None or self.V is not None or self.W is not None:
                raise ValueError("general form needs p0 and no V/W")
            if self.p0.dim != 2 * self.n:
                raise DimensionMismatchError(
                    f"p0 has dimension {self.p0.dim}, expected {2 * self.n}"
                )
        if self.p1 is not None and self.p1.dim != 2 * self.n:
            raise DimensionMismatchError(f"p1 has dimension {self.p1.dim}, expected {2 * self.n}")
        if self.flatten_radius is not None and not self.flatten_radius > 0:
            raise ValueError(f"flatten_radius must be positive, got {self.flatten_radius}")

    @classmethod
    def schrodinger(
        cls,
        V: ScalarField,
        W: ScalarField,
        p1: ScalarField | None = None,
        flatten_radius: float | None = None,
        name: str | None = None,
    ) -> "SymbolSpec":
        return cls(
            n=V.dim, form="schrodinger", V=V, W=W, p1=p1, flatten_radius=flatten_radius, name=name
        )

    @classmethod
    def general(
        cls,
        p0: ScalarField,
        p1: ScalarField | None = None,
        flatten_radius: float | None = None,
        name: str | None = None,
    ) -> "SymbolSpec":
        if p0.dim % 2:
            raise DimensionMismatchError(f"p0 must live on an even-dimensional space, got {p0.dim}")
        return cls(
            n=p0.dim // 2, form="general", p0=p0, p1=p1, flatten_radius=flatten_radius, name=name
        )

    @property
    def dim(self) -> int:
        return 2 * self.n

    def fields(self) -> list[ScalarField]:
        return [f for f in (self.V, self.W, self.p0) if f is not None]

    def subprincipal_at_origin(self) -> complex:
        if self.p1 is None:
            return 0j
        return complex(self.p1.value(np.zeros((1, self.dim)))[0])

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "n": self.n,
            "form": self.form,
            "flatten_radius": self.flatten_radius,
        }
        for key in ("V", "W", "p0", "p1"):
            fld = getattr(self, key)
            if fld is not None:
                out[key] = fld.to_dict()
        if self.name is not None:
            out["name"] = self.name
        return out


def spec_to_dict(spec: SymbolSpec) -> dict[str, Any]:
    return spec.to_dict()


def spec_from_dict(data: Any, pointer: str = "spec") -> SymbolSpec:
    """Parse the JSON form of a SymbolSpec; schema violations raise ConfigError."""
    if not isinstance(data, Mapping):
        raise ConfigError(pointer, "expected an object")
    form = data.get("form")
    if form not in FORMS:
        raise ConfigError(f"{pointer}.form", f"expected one of {list(FORMS)}, got {form!r}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError(f"{pointer}.n", f"expected a positive integer, got {n!r}")
    radius = data.get("flatten_radius")
    if radius is not None and (
        not isinstance(radius, (int, float)) or isinstance(radius, bool) or not radius > 0
    ):
        raise ConfigError(
            f"{pointer}.flatten_radius", f"expected a positive number or null, got {radius!r}"
        )

    def field(key: str, dim: int, required: bool) -> ScalarField | None:
        if key not in data or data[key] is None:
            if required:
                raise ConfigError(f"{pointer}.{key}", "missing required field")
            return None
        fld = ScalarField.from_dict(data[key], f"{pointer}.{key}")
        if fld.dim != dim:
            raise ConfigError(f"{pointer}.{key}.dim", f"expected dimension {dim}, got {fld.dim}")
        return fld

    try:
        if form == "schrodinger":
            V = field("V", n, True)
            W = field("W", n, True)
            for key, fld in (("V", V), ("W", W)):
                if not fld.is_real:  # type: ignore[union-attr]
                    raise ConfigError(f"{pointer}.{key}", "coefficients must be real")
            return SymbolSpec(
                n=n,
                form=form,
                V=V,
                W=W,
                p1=field("p1", 2 * n, False),
                flatten_radius=None if radius is None else float(radius),
                name=data.get("name"),
            )
        return SymbolSpec(
            n=n,
            form=form,
            p0=field("p0", 2 * n, True),
            p1=field("p1", 2 * n, False),
            flatten_radius=None if radius is None else float(radius),
            name=data.get("name"),
        )
    except (ValueError, DimensionMismatchError) as exc:
        raise ConfigError(pointer, str(exc)) from exc


# ---------------------------------------------------------------------------
# Principal symbol evaluation
# ---------------------------------------------------------------------------


def _raw_jet(spec: SymbolSpec, pts: FloatArray, order: int) -> Jet:
    if spec.form == "general":
        return spec.p0.jet(pts, order)  # type: ignore[union-attr]
    n = spec.n
    x, xi = pts[:, :n], pts[:, n:]
    v = spec.V.jet(x, order)  # type: ignore[union-attr]
    w = spec.W.jet(x, order)  # type: ignore[union-attr]
    value = np.sum(xi**2, axis=1) + v[0] + 1j * w[0]
    grad = hess = None
    if order >= 1:
        grad = np.concatenate([v[1] + 1j * w[1], 2.0 * xi], axis=1)
    if order >= 2:
        hess = np.zeros((pts.shape[0], 2 * n, 2 * n), dtype=complex)
        hess[:, :n, :n] = v[2] + 1j * w[2]
        hess[:, n:, n:] = 2.0 * np.eye(n)
    return value, grad, hess


def _flattened_jet(spec: SymbolSpec, pts: FloatArray, order: int, radius: float) -> Jet:
    value, grad, hess = _raw_jet(spec, pts, order)
    chi, dchi, ddchi = radial_cutoff(pts, radius, 2.0 * radius)
    shifted = value - 1.0
    out_value = chi * value + 1.0 - chi
    out_grad = out_hess = None
    if order >= 1:
        out_grad = dchi * shifted[:, None] + chi[:, None] * grad
    if order >= 2:
        out_hess = (
            ddchi * shifted[:, None, None]
            + dchi[:, :, None] * grad[:, None, :]  # type: ignore[index]
            + grad[:, :, None] * dchi[:, None, :]  # type: ignore[index]
            + chi[:, None, None] * hess
        )
    return out_value, out_grad, out_hess


def _resolve_flatten(spec: SymbolSpec, flatten: bool | None) -> bool:
    if flatten is None:
        return spec.flatten_radius is not None
    if flatten and spec.flatten_radius is None:
        raise ValueError("flattening requested for a spec without flatten_radius")
    return flatten


def principal_jet(
    spec: SymbolSpec, points: Any, order: int = 2, flatten: bool | None = None
) -> Jet:
    """
    Vectorized value/gradient/Hessian of p0 (or of the flattened p0) at stacked points.

    With flatten=None the flattened symbol is used iff spec.flatten_radius is set.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")
    pts, _ = as_points(points, spec.dim)
    if _resolve_flatten(spec, flatten):
        return _flattened_jet(spec, pts, order, spec.flatten_radius)  # type: ignore[arg-type]
    return _raw_jet(spec, pts, order)


def eval_symbol(spec: SymbolSpec, X: Any, order: int = 0, flatten: bool | None = None) -> Any:
    """
    Value (order 0), gradient (order 1) or Hessian (order 2) of p0 at X.

    A single PhasePoint or vector returns a scalar / vector / matrix; stacked
    points return stacked results.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")
    pts, single = as_points(X, spec.dim)
    result = principal_jet(spec, pts, order, flatten)[order]
    if single:
        return complex(result[0]) if order == 0 else result[0]
    return result


def flatten_symbol(spec: SymbolSpec, R: float) -> SymbolSpec:
    """
    Return the SymbolSpec of p_bar = chi p + 1 - chi with chi = 1 on |X| <= R, 0 on |X| >= 2R.

    The ellipticity precondition Re p0 > 0 is sampled on R <= |X| <= 2R.
    """
    if not R > 0:
        raise ValueError(f"flattening radius must be positive, got {R}")
    pts = shell_samples(spec.dim, R, 2.0 * R, radii=9, directions=64 * spec.dim)
    values = principal_jet(spec, pts, 0, flatten=False)[0].real
    worst = int(np.argmin(values))
    if values[worst] <= 0:
        raise EllipticityError(
            f"Re p0 = {values[worst]:.3e} is not positive at a sampled point with |X| >= {R}",
            witness=pts[worst].tolist(),
        )
    logger.debug("Flattening at R=%s; min Re p0 on the shell = %.4g", R, values[worst])
    return replace(spec, flatten_radius=float(R))


def complex_extension(
    spec: SymbolSpec, Z: ArrayLike, tube_width: float = TUBE_WIDTH
) -> ComplexArray:
    """
    Extension of p0 (flattened when spec.flatten_radius is set) to Z = X + iY.

    Polynomial pieces are extended exactly. Catalog pieces and the flattening
    transition |Re Z| >= R use the second-order jet, valid only for |Y| <= tube_width.
    """
    z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if z.shape[1] != spec.dim:
        raise DimensionMismatchError(
            f"expected complex points of dimension {spec.dim}, got {z.shape[1]}"
        )
    n = spec.n
    taylor_rows = np.zeros(z.shape[0], dtype=bool)

    def extend(fld: ScalarField, args: ComplexArray) -> ComplexArray:
        if fld.is_polynomial:
            return fld.value_complex(args)
        taylor_rows[:] = True
        return fld.taylor_extension(args)

    if spec.form == "schrodinger":
        zx, zxi = z[:, :n], z[:, n:]
        V, W = spec.V, spec.W
        out = np.sum(zxi**2, axis=1) + extend(V, zx) + 1j * extend(W, zx)  # type: ignore[arg-type]
    else:
        out = extend(spec.p0, z)  # type: ignore[arg-type]

    if spec.flatten_radius is not None:
        outside = np.linalg.norm(z.real, axis=1) >= spec.flatten_radius
        if np.any(outside):
            value, grad, hess = _flattened_jet(spec, z.real[outside], 2, spec.flatten_radius)
            y = z.imag[outside]
            out = out.copy()
            out[outside] = (
                value
                + 1j * np.einsum("mk,mk->m", grad, y)
                - 0.5 * np.einsum("mk,mkl,ml->m", y, hess, y)
            )
            taylor_rows |= outside

    widths = np.max(np.abs(z.imag), axis=1)
    bad = taylor_rows & (widths > tube_width)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise UnsupportedSymbolError(
            f"complex point leaves the tube |Im Z| <= {tube_width} where the jet extension is used",
            witness=[z[idx].real.tolist(), z[idx].imag.tolist()],
        )
    return out


# ---------------------------------------------------------------------------
# Real phase-space fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """
    A real function b on R^{2n} together with what its Hamilton flow needs.

    `position_gradient` marks fields depending on x only (closed-form flow);
    with `exact_radius` set, the closed form holds only for trajectories that
    stay inside that ball (flattened symbols);
    `linear_map` marks quadratic fields whose Hamilton field is X -> linear_map @ X.
    """

    dim: int
    jet: Callable[[FloatArray, int], tuple[FloatArray, Any, Any]]
    position_gradient: Callable[[FloatArray], FloatArray] | None = None
    linear_map: FloatArray | None = None
    exact_radius: float | None = None
    label: str = ""

    def value(self, points: ArrayLike) -> FloatArray:
        return self.jet(np.atleast_2d(np.asarray(points, dtype=float)), 0)[0]

    def gradient(self, points: ArrayLike) -> FloatArray:
        return self.jet(np.atleast_2d(np.asarray(points, dtype=float)), 1)[1]

    def hessian(self, points: ArrayLike) -> FloatArray:
        return self.jet(np.atleast_2d(np.asarray(points, dtype=float)), 2)[2]

    def hamilton_field(self, points: ArrayLike) -> FloatArray:
        """H_b(X) = (d_xi b, -d_x b)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.linear_map is not None:
            return pts @ self.linear_map.T
        n = self.dim // 2
        grad = self.gradient(pts)
        return np.concatenate([grad[:, n:], -grad[:, :n]], axis=1)


def principal_field(
    spec: SymbolSpec, part: str = "re", flatten: bool | None = None
) -> PhaseFunction:
    """Re p0 or Im p0 as a PhaseFunction (flattened iff spec.flatten_radius is set by default)."""
    if part not in ("re", "im"):
        raise ValueError(f"part must be 're' or 'im', got {part!r}")
    use_flat = _resolve_flatten(spec, flatten)
    take = np.real if part == "re" else np.imag

    def jet(pts: FloatArray, order: int) -> tuple[FloatArray, Any, Any]:
        value, grad, hess = principal_jet(spec, pts, order, flatten=use_flat)
        return (
            take(value),
            None if grad is None else take(grad),
            None if hess is None else take(hess),
        )

    position_gradient: Callable[[FloatArray], FloatArray] | None = None
    exact_radius = spec.flatten_radius if use_flat else None
    if spec.form == "schrodinger" and part == "im":
        W = spec.W

        def w_gradient(x: FloatArray) -> FloatArray:
            return W.jet(x, 1)[1].real  # type: ignore[union-attr,index]

        position_gradient = w_gradient

    label = f"{'Re' if part == 're' else 'Im'} p0{' (flattened)' if use_flat else ''}"
    return PhaseFunction(
        spec.dim, jet, position_gradient=position_gradient, exact_radius=exact_radius, label=label
    )


def quadratic_field(matrix: ArrayLike, label: str = "quadratic") -> PhaseFunction:
    """b(X) = <M X, X> for symmetric M; its Hamilton field is linear, 2 J M X."""
    M = np.asarray(matrix, dtype=float)
    M = 0.5 * (M + M.T)
    dim = M.shape[0]

    def jet(pts: FloatArray, order: int) -> tuple[FloatArray, Any, Any]:
        MX = pts @ M
        value = np.einsum("mk,mk->m", MX, pts)
        grad = 2.0 * MX if order >= 1 else None
        hess = np.broadcast_to(2.0 * M, (pts.shape[0], dim, dim)) if order >= 2 else None
        return value, grad, hess

    return PhaseFunction(dim, jet, linear_map=2.0 * symplectic_matrix(dim // 2) @ M, label=label)


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleBox:
    """Deterministic tensor grid on [-radius, radius]^{2n}."""

    radius: float
    points_per_axis: int = 41

    def points(self, dim: int) -> FloatArray:
        count = self.points_per_axis if self.points_per_axis % 2 else self.points_per_axis + 1
        return box_grid(dim, self.radius, count)


@dataclass
class FlagResult:
    ok: bool
    witness: list[float] | None = None
    margin: float | None = None
    detail: str = ""


@dataclass
class AssumptionReport:
    positivity: FlagResult
    elliptic_at_infinity: FlagResult
    critical_set: FlagResult
    quadratic_growth: FlagResult
    im_bound: FlagResult
    ellipticity_constant: float | None
    flattened: bool
    box_radius: float
    samples: int

    @property
    def all_ok(self) -> bool:
        return all(
            f.ok
            for f in (
                self.positivity,
                self.elliptic_at_infinity,
                self.critical_set,
                self.quadratic_growth,
                self.im_bound,
            )
        )

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["all_ok"] = self.all_ok
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _fit_ellipticity(
    pts: FloatArray, r: FloatArray, re: FloatArray, radius: float
) -> tuple[FlagResult, float | None]:
    """Smallest sampled C with Re p >= 1/C on C <= |X| <= radius."""
    cap = 0.75 * radius
    inside = r <= radius
    order = np.argsort(r[inside])[::-1]
    radii = r[inside][order]
    tail_min = np.minimum.accumulate(re[inside][order])
    safe = np.where(radii > 0, radii, np.inf)
    valid = (radii > 0) & (radii <= cap) & (tail_min >= 1.0 / safe)
    if np.any(valid):
        C = float(np.min(radii[valid]))
        return FlagResult(True, margin=C, detail=f"Re p >= 1/C for |X| >= C = {C:.4g}"), C
    shell = np.flatnonzero(inside & (r >= cap))
    worst = shell[int(np.argmin(re[shell]))]
    return (
        FlagResult(
            False,
            witness=pts[worst].tolist(),
            margin=float(re[worst] - 1.0 / cap),
            detail="no sampled C <= 0.75 * box radius bounds Re p from below",
        ),
        None,
    )


def _critical_set(
    spec: SymbolSpec, pts: FloatArray, r: FloatArray, re: FloatArray, im_grad: FloatArray
) -> FlagResult:
    n = spec.n
    origin = np.zeros((1, spec.dim))
    value0, grad0, hess0 = principal_jet(spec, origin, 2, flatten=False)
    grad_at_origin = grad0[0]  # type: ignore[index]
    if abs(value0[0]) > CRITICAL_TOL or np.max(np.abs(grad_at_origin)) > CRITICAL_TOL:
        return FlagResult(
            False,
            witness=origin[0].tolist(),
            margin=float(abs(value0[0])),
            detail="p0 or dp0 does not vanish at the origin",
        )

    hamilton = np.concatenate([im_grad[:, n:], -im_grad[:, :n]], axis=1)
    hamilton_norm = np.linalg.norm(hamilton, axis=1)
    critical = (re < CRITICAL_TOL) & (hamilton_norm < CRITICAL_TOL)
    hits = np.flatnonzero((r > CRITICAL_EXCLUSION) & critical)
    if hits.size:
        first = hits[int(np.argmin(r[hits]))]
        return FlagResult(
            False,
            witness=pts[first].tolist(),
            margin=float(r[first]),
            detail="sampled critical point away from the origin",
        )

    if spec.form == "schrodinger":
        w_hess = spec.W.jet(np.zeros((1, n)), 2)[2][0].real  # type: ignore[union-attr,index]
        smallest = float(np.min(np.linalg.svd(w_hess, compute_uv=False)))
        detail = "W''(0) nondegenerate"
    else:
        H = hess0[0]  # type: ignore[index]
        stacked = np.vstack([H.real, H.imag])
        smallest = float(np.min(np.linalg.svd(stacked, compute_uv=False)))
        detail = "quadratic model isolates the origin"
    if smallest <= CRITICAL_TOL:
        return FlagResult(
            False,
            witness=origin[0].tolist(),
            margin=smallest,
            detail="degenerate quadratic model at the origin",
        )
    return FlagResult(True, margin=smallest, detail=detail)


def check_assumptions(spec: SymbolSpec, sample_box: SampleBox) -> AssumptionReport:
    """Decide the standing assumptions on a deterministic grid; failures carry witnesses."""
    if spec.flatten_radius is not None and sample_box.radius < 2.0 * spec.flatten_radius:
        raise ValueError(
            f"sample box radius {sample_box.radius} must cover "
            f"2 * flatten_radius = {2 * spec.flatten_radius}"
        )
    pts = sample_box.points(spec.dim)
    value, grad, hess = principal_jet(spec, pts, 2)
    re, im = value.real, value.imag
    r = np.linalg.norm(pts, axis=1)

    worst = int(np.argmin(re))
    positivity = FlagResult(
        bool(re[worst] >= -CRITICAL_TOL),
        witness=None if re[worst] >= -CRITICAL_TOL else pts[worst].tolist(),
        margin=float(re[worst]),
    )

    elliptic, C = _fit_ellipticity(pts, r, re, sample_box.radius)
    critical = _critical_set(spec, pts, r, re, grad.imag)  # type: ignore[union-attr]

    hess_norm = np.linalg.norm(hess, axis=(1, 2))  # type: ignore[arg-type]
    peak = int(np.argmax(hess_norm))
    flattened = spec.flatten_radius is not None
    bounded = flattened or all(f.bounded_hessian for f in spec.fields())
    growth = FlagResult(
        bool(bounded),
        witness=None if bounded else pts[peak].tolist(),
        margin=float(hess_norm[peak]),
        detail="flattened symbol" if flattened else "derivative bound from field degrees",
    )

    ratio = np.abs(im) / (1.0 + np.maximum(re, 0.0))
    ball = r <= sample_box.radius
    c_full = float(np.max(ratio[ball]))
    c_half = float(np.max(ratio[r <= 0.5 * sample_box.radius]))
    c_shell = float(np.max(ratio[ball & (r >= 0.9 * sample_box.radius)], initial=0.0))
    saturates = c_full <= 1.5 * c_half + 1e-12 or c_shell < c_full
    im_witness = None
    if not saturates:
        top = np.flatnonzero(ball)[int(np.argmax(ratio[ball]))]
        im_witness = pts[top].tolist()
    im_bound = FlagResult(
        bool(saturates),
        witness=im_witness,
        margin=c_full,
        detail=f"|Im p| <= C (1 + Re p) with sampled C = {c_full:.4g}",
    )

    report = AssumptionReport(
        positivity=positivity,
        elliptic_at_infinity=elliptic,
        critical_set=critical,
        quadratic_growth=growth,
        im_bound=im_bound,
        ellipticity_constant=C,
        flattened=flattened,
        box_radius=sample_box.radius,
        samples=int(pts.shape[0]),
    )
    logger.info(
        "Assumption check on %d samples (radius %.3g): all_ok=%s",
        pts.shape[0],
        sample_box.radius,
        report.all_ok,
    )
    return report


@dataclass
class OrderFit:
    ok: bool
    N: int | None
    C: float
    witness: list[list[float]] | None = None


def check_order_function(spec: SymbolSpec, pairs: ArrayLike, c_max: float = 4.0) -> OrderFit:
    """
    Fit m(Y) <= C <X - Y>^N m(X) for m = 1 + Re p0 over sample pairs.

    `pairs` has shape (k, 2, 2n). The smallest N in {0, 1, 2} with fitted
    C <= c_max is returned; otherwise the worst pair for N = 2.
    """
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 3 or arr.shape[1] != 2 or arr.shape[2] != spec.dim:
        raise DimensionMismatchError(f"pairs must have shape (k, 2, {spec.dim}), got {arr.shape}")
    X, Y = arr[:, 0, :], arr[:, 1, :]
    m_x = 1.0 + principal_jet(spec, X, 0)[0].real
    m_y = 1.0 + principal_jet(spec, Y, 0)[0].real
    bracket = np.sqrt(1.0 + np.sum((X - Y) ** 2, axis=1))
    ratio = np.ones_like(m_x)
    for N in (0, 1, 2):
        ratio = m_y / (bracket**N * m_x)
        C = float(np.max(ratio))
        if C <= c_max:
            return OrderFit(True, N, C)
    worst = int(np.argmax(ratio))
    witness = [X[worst].tolist(), Y[worst].tolist()]
    return OrderFit(False, None, float(ratio[worst]), witness=witness)
