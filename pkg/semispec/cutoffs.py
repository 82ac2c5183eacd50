"""
Smooth cutoff profiles built from exp(-1/u).

All functions are vectorized over numpy arrays and return the value together
with the first two derivatives, so callers can assemble exact gradients and
Hessians of cutoff-weighted symbols.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]


def flat_exp(u: ArrayLike) -> tuple[FloatArray, FloatArray, FloatArray]:
    """theta(u) = exp(-1/u) for u > 0 and 0 otherwise, with theta' and theta''."""
    u = np.asarray(u, dtype=float)
    # exp(-1/u) underflows below this threshold
    positive = u > 1.0 / 700.0
    safe = np.where(positive, u, 1.0)
    theta = np.where(positive, np.exp(-1.0 / safe), 0.0)
    d1 = theta / safe**2
    d2 = theta * (1.0 / safe**4 - 2.0 / safe**3)
    return theta, np.where(positive, d1, 0.0), np.where(positive, d2, 0.0)


def smoothstep(u: ArrayLike) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    C-infinity step s(u) = theta(u) / (theta(u) + theta(1 - u)).

    s = 0 for u <= 0, s = 1 for u >= 1, monotone in between.
    """
    u = np.asarray(u, dtype=float)
    a, a1, a2 = flat_exp(u)
    b, b1, b2 = flat_exp(1.0 - u)
    # chain rule for theta(1 - u)
    b1 = -b1
    denom = a + b
    num = a1 * b - a * b1
    num1 = a2 * b - a * b2
    d = denom**2
    d_prime = 2.0 * denom * (a1 + b1)
    s = a / denom
    s1 = num / d
    s2 = (num1 * d - num * d_prime) / d**2
    return s, s1, s2


def bridge(r: ArrayLike, inner: float, outer: float) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Profile equal to 1 on r <= inner, 0 on r >= outer, decreasing in between."""
    if not outer > inner:
        raise ValueError(f"outer radius must exceed inner radius, got {inner}, {outer}")
    width = outer - inner
    s, s1, s2 = smoothstep((np.asarray(r, dtype=float) - inner) / width)
    return 1.0 - s, -s1 / width, -s2 / width**2


def radial_cutoff(
    points: ArrayLike, inner: float, outer: float
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    chi(X) = bridge(|X|) evaluated at rows of ``points``.

    Returns (chi, grad chi, Hess chi) with shapes (m,), (m, d), (m, d, d).
    Derivatives vanish identically on the inner ball, so |X| = 0 is safe.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = pts.shape[1]
    r = np.linalg.norm(pts, axis=1)
    rho, rho1, rho2 = bridge(r, inner, outer)
    safe_r = np.where(r > 0, r, 1.0)
    unit = pts / safe_r[:, None]
    grad = rho1[:, None] * unit
    outer_prod = unit[:, :, None] * unit[:, None, :]
    eye = np.eye(dim)[None, :, :]
    hess = rho2[:, None, None] * outer_prod + (rho1 / safe_r)[:, None, None] * (eye - outer_prod)
    return rho, grad, hess


def decay_profile(t: ArrayLike) -> FloatArray:
    """g(t): 1 on t <= 1, 1/t on t >= 2, smooth and decreasing on (1, 2)."""
    t = np.asarray(t, dtype=float)
    s, _, _ = smoothstep(t - 1.0)
    safe_t = np.where(t > 0, t, 1.0)
    return np.where(t <= 1.0, 1.0, 1.0 + (1.0 / safe_t - 1.0) * s)
