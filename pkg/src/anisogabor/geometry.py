"""s-conic phase-space geometry.

Phase space is T*R^d with points z = (x, xi).  For a fixed anisotropy
exponent s > 0 the dilations

    (x, xi) -> (lam * x, lam**s * xi),   lam > 0,

play the role ordinary dilations play in conic geometry.  This module
provides the anisotropic weight ``mu_weight``, the radial coordinate
``solve_lambda`` (the unique lam with lam**-2 |x|^2 + lam**-2s |xi|^2 = 1),
the projection onto the unit sphere along dilation orbits, and membership
tests for the two flavours of s-conic neighborhood.

Conventions
-----------
All functions are dimension generic.  ``x`` and ``xi`` are arrays whose
*last* axis is the space dimension d; leading axes are broadcast batch
axes.  Scalars are accepted for d = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryConfig",
    "SConicNbhd",
    "angular_distance",
    "contains",
    "kappa",
    "mu_weight",
    "project",
    "ray",
    "solve_lambda",
    "sphere_grid",
]


@dataclass(frozen=True)
class GeometryConfig:
    """Numeric tolerances shared by the geometry routines."""

    lambda_tol: float = 1e-12        # relative tolerance of the radial solver
    bisect_iters: int = 64
    newton_iters: int = 6
    tilde_log_halfwidth: float = 10.0  # search window (in log lam) for tilde membership
    tilde_iters: int = 200


DEFAULT_CONFIG = GeometryConfig()


def _as_points(x, xi):
    """Broadcast (x, xi) to matching float arrays with a trailing d axis."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if x.shape[-1] != xi.shape[-1]:
        raise ValueError(f"x and xi disagree on dimension: {x.shape} vs {xi.shape}")
    x, xi = np.broadcast_arrays(x, xi)
    return x, xi


def kappa(t):
    """Subadditivity constant for the map r -> r**t: 1 for t <= 1, 2**(t-1) above.

    Satisfies |a + b|**t <= kappa(t) * (|a|**t + |b|**t) for a, b in R^d.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("kappa requires t > 0")
    out = np.where(t <= 1.0, 1.0, 2.0 ** (t - 1.0))
    return float(out) if out.ndim == 0 else out


def mu_weight(x, xi, s):
    """Anisotropic weight 1 + |x| + |xi|**(1/s).  Always >= 1; accepts z = 0."""
    if s <= 0:
        raise ValueError("s must be positive")
    x, xi = _as_points(x, xi)
    nx = np.linalg.norm(x, axis=-1)
    nxi = np.linalg.norm(xi, axis=-1)
    out = 1.0 + nx + nxi ** (1.0 / s)
    return float(out) if out.ndim == 0 else out


def solve_lambda(x, xi, s, tol=None, config=DEFAULT_CONFIG):
    """Radial coordinate: the unique lam > 0 with lam**-2 |x|^2 + lam**-2s |xi|^2 = 1.

    The residual is strictly decreasing in lam, so the root is bracketed by
    [max(|x|, |xi|**(1/s)), 2**k * ...] and found by bisection in log lam
    followed by a Newton polish.  Vectorized over batch axes.

    Raises
    ------
    ValueError
        If any input point is the origin (lam is undefined there).
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if tol is None:
        tol = config.lambda_tol
    x, xi = _as_points(x, xi)
    A = np.sum(x * x, axis=-1)
    B = np.sum(xi * xi, axis=-1)
    scalar = A.ndim == 0
    A = np.atleast_1d(A)
    B = np.atleast_1d(B)
    if np.any((A == 0) & (B == 0)):
        raise ValueError("lambda is undefined at the origin")

    lam = np.empty_like(A)
    only_x = B == 0
    only_xi = A == 0
    lam[only_x] = np.sqrt(A[only_x])
    lam[only_xi] = B[only_xi] ** (1.0 / (2.0 * s))

    mixed = ~(only_x | only_xi)
    if np.any(mixed):
        a = A[mixed]
        b = B[mixed]

        def resid(t):
            return a * np.exp(-2.0 * t) + b * np.exp(-2.0 * s * t) - 1.0

        lo = np.log(np.maximum(np.sqrt(a), b ** (1.0 / (2.0 * s))))
        hi = lo + np.log(2.0)
        for _ in range(256):
            bad = resid(hi) > 0
            if not np.any(bad):
                break
            hi = np.where(bad, hi + np.log(2.0), hi)
        for _ in range(config.bisect_iters):
            mid = 0.5 * (lo + hi)
            pos = resid(mid) >= 0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        t = 0.5 * (lo + hi)
        for _ in range(config.newton_iters):
            ea = a * np.exp(-2.0 * t)
            eb = b * np.exp(-2.0 * s * t)
            f = ea + eb - 1.0
            fp = -2.0 * ea - 2.0 * s * eb
            step = f / fp
            t = np.clip(t - step, lo - 1.0, hi + 1.0)
        lam[mixed] = np.exp(t)

    # final consistency check at the requested tolerance
    res = A / lam**2 + B / lam ** (2.0 * s) - 1.0
    if np.any(np.abs(res) > max(tol, 64 * np.finfo(float).eps) * 16):
        raise RuntimeError("radial solve failed to converge")
    return float(lam[0]) if scalar else lam


def ray(x, xi, lam, s):
    """The dilation orbit point (lam * x, lam**s * xi)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lam must be positive")
    x, xi = _as_points(x, xi)
    lam = lam[..., None] if lam.ndim else lam
    return lam * x, lam**s * xi


def project(x, xi, s, config=DEFAULT_CONFIG):
    """Project z != 0 along its dilation orbit onto the unit sphere S^{2d-1}.

    Returns (lam**-1 x, lam**-s xi); constant along orbits.
    """
    x, xi = _as_points(x, xi)
    lam = np.asarray(solve_lambda(x, xi, s, config=config))
    if lam.ndim == 0:
        return x / float(lam), xi / float(lam) ** s
    return x / lam[..., None], xi / lam[..., None] ** s


def sphere_grid(d, n, seed=0):
    """Unit-sphere directions in R^{2d} as an (n, 2d) array.

    d = 1 gives n uniformly spaced angles on the circle (starting at angle 0);
    d >= 2 falls back to a seeded uniform sample.
    """
    if d == 1:
        theta = 2.0 * np.pi * np.arange(n) / n
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, 2 * d))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def angular_distance(u, v):
    """Great-circle angle (radians) between unit vectors; broadcasts."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = np.clip(np.sum(u * v, axis=-1), -1.0, 1.0)
    return np.arccos(c)


@dataclass(frozen=True)
class SConicNbhd:
    """An s-conic neighborhood of a unit-sphere center.

    kind = "projection": {z != 0 : |center - p(z)| < epsilon}.
    kind = "tilde":      {z : some lam > 0 puts (lam x, lam**s xi) within
    epsilon of the center}.  Projection neighborhoods cover everything once
    epsilon > 2, so epsilon <= 2 is enforced for that kind.
    """

    center: np.ndarray
    epsilon: float
    s: float
    kind: str = "projection"

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        if abs(np.linalg.norm(c) - 1.0) > 1e-9:
            raise ValueError("center must lie on the unit sphere")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.kind == "projection" and self.epsilon > 2.0:
            raise ValueError("projection neighborhoods require epsilon <= 2")
        if self.kind not in ("projection", "tilde"):
            raise ValueError(f"unknown neighborhood kind {self.kind!r}")


def contains(nbhd, x, xi, config=DEFAULT_CONFIG):
    """Membership of z != 0 in an s-conic neighborhood (scalar points only).

    For kind = "tilde" the defining condition "exists lam" is decided by
    minimizing |(lam x, lam**s xi) - center| over log lam with a multi-start
    golden-section search centered at the orbit's sphere crossing.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if not (np.any(x) or np.any(xi)):
        raise ValueError("membership is undefined at the origin")
    d = x.shape[-1]
    c = nbhd.center
    cx, cxi = c[:d], c[d:]
    s = nbhd.s

    if nbhd.kind == "projection":
        px, pxi = project(x, xi, s, config=config)
        dist = np.sqrt(np.sum((px - cx) ** 2, axis=-1) + np.sum((pxi - cxi) ** 2, axis=-1))
        return bool(dist < nbhd.epsilon)

    lam0 = solve_lambda(x, xi, s, config=config)
    t0 = -np.log(lam0)  # ray(z, 1/lam) = p(z) sits on the sphere

    def dist2(t):
        m = np.exp(t)
        return np.sum((m * x - cx) ** 2) + np.sum((m**s * xi - cxi) ** 2)

    h = config.tilde_log_halfwidth
    best = np.inf
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    for k in range(3):  # multi-start: the objective need not be unimodal globally
        a = t0 - h + k * (2.0 * h / 3.0)
        b = a + 2.0 * h / 3.0
        c1 = b - gr * (b - a)
        c2 = a + gr * (b - a)
        f1, f2 = dist2(c1), dist2(c2)
        for _ in range(config.tilde_iters):
            if f1 < f2:
                b, c2, f2 = c2, c1, f1
                c1 = b - gr * (b - a)
                f1 = dist2(c1)
            else:
                a, c1, f1 = c1, c2, f2
                c2 = a + gr * (b - a)
                f2 = dist2(c2)
            if b - a < 1e-12:
                break
        best = min(best, f1, f2)
    return bool(np.sqrt(best) < nbhd.epsilon)
