"""Anisotropic Shubin-type symbols and their empirical calculus.

A symbol is a smooth function a(x, xi) on phase space, represented either
exactly (a :class:`~anisogabor.polynomials.PhasePoly`) or as a vectorized
callable with finite-difference derivatives.  The class G(m, s) consists of
symbols whose derivatives obey

    |d_x^alpha d_xi^beta a| <= C * mu_s(x, xi)**(m - |alpha| - s*|beta|),

with mu_s = 1 + |x| + |xi|**(1/s).  Membership over all of phase space is
not decidable from samples, so this module provides *empirical* seminorms,
grid-refinement membership verdicts, s-conic cutoff construction, a
characteristic-set estimator for polynomial symbols, and finite asymptotic
sums with verified excision scales.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .geometry import mu_weight, project, ray, solve_lambda, sphere_grid
from .polynomials import PhasePoly

__all__ = [
    "CharSetConfig",
    "CharSetEstimate",
    "SamplingGrid",
    "SeminormReport",
    "Symbol",
    "asymptotic_sum",
    "char_set_poly",
    "check_membership",
    "isotropic_embedding",
    "make_cutoff",
    "seminorm_estimate",
    "smoothstep",
]

_EPS = np.finfo(float).eps

# second-order central stencils, offset -> weight, to be divided by h**order
_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.clip(t, 1e-300, None)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.clip(1.0 - t, 1e-300, None)), 0.0)
    out = a / (a + b)
    return float(out) if out.ndim == 0 else out


class Symbol:
    """Phase-space symbol with a claimed class (m, s).

    kind = "polynomial" wraps a :class:`PhasePoly` (exact derivatives);
    kind = "callable" wraps a vectorized function f(x, xi) -> complex with
    central finite differences at an anisotropic, lambda-scaled step.
    """

    MAX_FD_ORDER = 4

    def __init__(self, kind, *, poly=None, func=None, d=1, order_m=None, s=None,
                 fd_step=1e-4, fd_scale=True, label=""):
        if kind not in ("polynomial", "callable"):
            raise ValueError(f"unknown symbol kind {kind!r}")
        self.kind = kind
        self.poly = poly
        self.func = func
        self.d = poly.d if poly is not None else d
        self.order_m = order_m
        self.s = s
        self.fd_step = fd_step
        self.fd_scale = fd_scale
        self.label = label
        self.cutoff_info = None
        if kind == "polynomial" and poly is None:
            raise ValueError("polynomial symbol needs a PhasePoly")
        if kind == "callable" and func is None:
            raise ValueError("callable symbol needs an evaluator")

    @classmethod
    def from_poly(cls, poly, order_m=None, s=None, label=""):
        return cls("polynomial", poly=poly, order_m=order_m, s=s, label=label)

    @classmethod
    def from_callable(cls, func, d=1, order_m=None, s=None, fd_step=1e-4, label=""):
        return cls("callable", func=func, d=d, order_m=order_m, s=s,
                   fd_step=fd_step, label=label)

    def evaluate(self, x, xi):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.kind == "polynomial":
            return self.poly.evaluate(x, xi)
        return np.asarray(self.func(x, xi), dtype=complex).reshape(
            np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]))

    __call__ = evaluate

    def conj(self):
        if self.kind == "polynomial":
            return Symbol.from_poly(self.poly.conj(), self.order_m, self.s)
        f = self.func
        return Symbol.from_callable(lambda x, xi: np.conj(f(x, xi)), self.d,
                                    self.order_m, self.s, self.fd_step)

    def _fd_steps(self, x, xi, total_order, s):
        """Per-point step, anisotropically scaled: h*max(1,lam) in x, ...**s in xi."""
        h = max(self.fd_step, _EPS ** (1.0 / (2.0 + total_order)))
        if not self.fd_scale:
            return np.full(x.shape[:-1], h), np.full(x.shape[:-1], h)
        nrm2 = np.sum(x * x, axis=-1) + np.sum(xi * xi, axis=-1)
        lam = np.ones(nrm2.shape)
        nz = nrm2 > 0
        if np.any(nz):
            lam[nz] = solve_lambda(x[nz], xi[nz], s)
        scale = np.maximum(1.0, lam)
        return h * scale, h * scale**s

    def derivative(self, alpha, beta, x, xi, s=None):
        """d_x^alpha d_xi^beta a at the given points (exact for polynomials)."""
        alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
        beta = (beta,) if np.isscalar(beta) else tuple(beta)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.kind == "polynomial":
            return self.poly.derivative(alpha, beta).evaluate(x, xi)

        total = sum(alpha) + sum(beta)
        if total == 0:
            return self.evaluate(x, xi)
        if total > self.MAX_FD_ORDER or max(alpha + beta) > self.MAX_FD_ORDER:
            raise ValueError(
                f"finite-difference order {total} exceeds the configured maximum "
                f"{self.MAX_FD_ORDER}")
        s = s if s is not None else (self.s if self.s is not None else 1.0)
        hx, hxi = self._fd_steps(x, xi, total, s)

        slots = []  # (is_xi, coordinate index, stencil, step array)
        for i, n in enumerate(alpha):
            if n:
                slots.append((False, i, _STENCILS[n], n))
        for i, n in enumerate(beta):
            if n:
                slots.append((True, i, _STENCILS[n], n))

        out = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), dtype=complex)
        for combo in itertools.product(*[st for _, _, st, _ in slots]):
            xs = np.array(x, copy=True)
            xis = np.array(xi, copy=True)
            w = np.ones(out.shape)
            for (is_xi, i, _, n), (off, coef) in zip(slots, combo):
                h = hxi if is_xi else hx
                if is_xi:
                    xis[..., i] = xis[..., i] + off * h
                else:
                    xs[..., i] = xs[..., i] + off * h
                w = w * coef / h**n
            out = out + w * self.evaluate(xs, xis)
        return out


def isotropic_embedding(m, s):
    """Isotropic class receiving G(m, s): order max(m, m/s), parameter min(s, 1/s)."""
    if s <= 0:
        raise ValueError("s must be positive")
    return (max(m, m / s), min(s, 1.0 / s))


# ---------------------------------------------------------------------------
# sampling grids and empirical seminorms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingGrid:
    """Phase-space probe set: dilation orbits over sphere directions plus a core box.

    Probes ray(w, lam) for lam geometric in [lambda_min, lambda_max] over
    n_dir sphere directions, together with a small near-origin sample, so
    that weighted sups see both the asymptotic cone structure and the core.
    """

    s: float
    d: int = 1
    lambda_min: float = 0.5
    lambda_max: float = 64.0
    n_lambda: int = 24
    n_dir: int = 48
    n_core: int = 32
    seed: int = 0

    def points(self):
        dirs = sphere_grid(self.d, self.n_dir, seed=self.seed)
        lams = np.geomspace(self.lambda_min, self.lambda_max, self.n_lambda)
        wx, wxi = dirs[:, : self.d], dirs[:, self.d:]
        X = lams[:, None, None] * wx[None, :, :]
        XI = (lams[:, None, None] ** self.s) * wxi[None, :, :]
        x = X.reshape(-1, self.d)
        xi = XI.reshape(-1, self.d)
        rng = np.random.default_rng(self.seed + 1)
        core = rng.uniform(-1.0, 1.0, size=(self.n_core, 2 * self.d))
        return (np.concatenate([x, core[:, : self.d]]),
                np.concatenate([xi, core[:, self.d:]]))

    def refined(self, factor=2.0):
        """Extend the sampled radial range (directions held fixed): sup
        stability under this refinement is the bounded-membership criterion."""
        return SamplingGrid(self.s, self.d, self.lambda_min,
                            self.lambda_max * factor,
                            int(self.n_lambda * factor), self.n_dir,
                            self.n_core, self.seed)


@dataclass
class SeminormReport:
    """Empirical weighted sups max_{grid} mu_s^{-m+|a|+s|b|} |d^{a,b} symbol|."""

    m: float
    s: float
    j: int
    entries: dict
    poisoned: list = field(default_factory=list)
    grid: SamplingGrid | None = None

    def value(self, j=None):
        j = self.j if j is None else j
        vals = [v for (a, b), v in self.entries.items() if sum(a) + sum(b) <= j]
        return max(vals) if vals else 0.0

    def entry(self, alpha, beta):
        alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
        beta = (beta,) if np.isscalar(beta) else tuple(beta)
        return self.entries[(alpha, beta)]

    def is_finite(self):
        return not self.poisoned and all(np.isfinite(v) for v in self.entries.values())

    def to_json_obj(self):
        return {
            "m": self.m, "s": self.s, "j": self.j,
            "entries": [{"alpha": list(a), "beta": list(b), "sup": float(v)}
                        for (a, b), v in sorted(self.entries.items())],
            "poisoned": [{"alpha": list(a), "beta": list(b), "x": list(map(float, px)),
                          "xi": list(map(float, pxi))}
                         for (a, b), (px, pxi) in self.poisoned],
        }


def _multi_indices(d, j):
    """All (alpha, beta) with |alpha| + |beta| <= j."""
    idx = []
    for total in range(j + 1):
        for ja in range(total + 1):
            for alpha in itertools.product(range(ja + 1), repeat=d):
                if sum(alpha) != ja:
                    continue
                for beta in itertools.product(range(total - ja + 1), repeat=d):
                    if sum(beta) == total - ja:
                        idx.append((alpha, beta))
    return idx


def seminorm_estimate(a, m, s, j, grid=None):
    """Empirical G(m, s) seminorm table of a up to derivative order j.

    Non-finite evaluations do not abort the sweep; they are recorded in the
    report's ``poisoned`` list with the offending location.
    """
    if grid is None:
        grid = SamplingGrid(s=s, d=a.d)
    if j > Symbol.MAX_FD_ORDER and a.kind == "callable":
        raise ValueError("derivative order exceeds the callable budget")
    x, xi = grid.points()
    mu = mu_weight(x, xi, s)
    entries = {}
    poisoned = []
    for alpha, beta in _multi_indices(a.d, j):
        w = mu ** (-m + sum(alpha) + s * sum(beta))
        vals = w * np.abs(a.derivative(alpha, beta, x, xi, s=s))
        bad = ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.argmax(bad))
            poisoned.append(((alpha, beta), (x[k], xi[k])))
            vals = vals[~bad]
        entries[(alpha, beta)] = float(np.max(vals)) if vals.size else np.nan
    return SeminormReport(m=m, s=s, j=j, entries=entries, poisoned=poisoned, grid=grid)


def check_membership(a, m, s, j=2, grid=None, refine=2.0, tol=0.05):
    """Grid-refinement verdict for a in G(m, s): seminorms must be finite and
    stable (refined/coarse <= 1 + tol) when the sampled range is extended.

    Returns (verdict, coarse_report, refined_report).
    """
    if grid is None:
        grid = SamplingGrid(s=s, d=a.d)
    rep0 = seminorm_estimate(a, m, s, j, grid)
    rep1 = seminorm_estimate(a, m, s, j, grid.refined(refine))
    if not (rep0.is_finite() and rep1.is_finite()):
        return False, rep0, rep1
    ok = True
    for key, v0 in rep0.entries.items():
        v1 = rep1.entries[key]
        ref = max(v0, 1e-12)
        if v1 > (1.0 + tol) * ref + 1e-12:
            ok = False
    return ok, rep0, rep1


# ---------------------------------------------------------------------------
# s-conic cutoffs
# ---------------------------------------------------------------------------


def make_cutoff(z0, epsilon, r, s, d=None):
    """Smooth s-conic cutoff: 1 on the epsilon-cone beyond radius r, supported
    in the 2*epsilon-cone beyond radius r/2.

    Built as g(|z|/r) * phi(p(z)), a radial step times a plateau bump on the
    unit sphere transported along dilation orbits; values lie in [0, 1].
    """
    z0 = np.asarray(z0, dtype=float)
    if d is None:
        d = z0.size // 2
    if abs(np.linalg.norm(z0) - 1.0) > 1e-9:
        raise ValueError("z0 must be a unit vector")
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if r <= 0:
        raise ValueError("r must be positive")
    cx, cxi = z0[:d], z0[d:]

    def chi(x, xi):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        x = np.broadcast_to(x, shape + (d,)).reshape(-1, d)
        xi = np.broadcast_to(xi, shape + (d,)).reshape(-1, d)
        nz = np.sqrt(np.sum(x * x, axis=-1) + np.sum(xi * xi, axis=-1))
        radial = smoothstep(2.0 * nz / r - 1.0)
        out = np.zeros(nz.shape)
        live = radial > 0.0
        if np.any(live):
            px, pxi = project(x[live], xi[live], s)
            dist = np.sqrt(np.sum((px - cx) ** 2, axis=-1)
                           + np.sum((pxi - cxi) ** 2, axis=-1))
            angular = 1.0 - smoothstep(dist / epsilon - 1.0)
            out[live] = radial[live] * angular
        return out.reshape(shape).astype(complex)

    sym = Symbol.from_callable(chi, d=d, order_m=0.0, s=s,
                               label=f"cutoff(eps={epsilon}, r={r})")
    sym.cutoff_info = {"z0": z0, "epsilon": epsilon, "r": r, "s": s}
    return sym


# ---------------------------------------------------------------------------
# characteristic sets of polynomial symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharSetConfig:
    cap_chord: float = 0.01       # probe cap radius around each direction (chord)
    cap_samples: int = 5
    lambda_min: float = 4.0       # probe radii (R in the lower bound)
    lambda_max: float = 256.0
    n_lambda: int = 9
    rel_floor: float = 0.02       # characteristic iff min |a|/lam^m1 < rel_floor * scale
    slope_tol: float = 0.15       # max |log-log trend| tolerated for "bounded"
    deriv_order: int = 2


@dataclass
class CharSetEstimate:
    """Per-direction characteristic verdicts, stored on the unit sphere
    (hence s-conic by construction)."""

    s: float
    m1: float
    directions: np.ndarray
    characteristic: np.ndarray
    min_ratio: np.ndarray
    ratio_slope: np.ndarray
    deriv_slope: np.ndarray
    config: CharSetConfig

    def char_directions(self):
        return self.directions[self.characteristic]

    def to_json_obj(self):
        return {
            "s": self.s, "m1": self.m1,
            "directions": [list(map(float, v)) for v in self.directions],
            "characteristic": [bool(b) for b in self.characteristic],
            "min_ratio": [float(v) for v in self.min_ratio],
            "ratio_slope": [float(v) for v in self.ratio_slope],
            "deriv_slope": [float(v) for v in self.deriv_slope],
        }


def _cap_directions(z0, chord, n):
    """Unit vectors within the given chord of z0 (2-d: an arc; else tangent jitter)."""
    z0 = np.asarray(z0, dtype=float)
    if z0.size == 2:
        theta0 = np.arctan2(z0[1], z0[0])
        half = 2.0 * np.arcsin(min(chord / 2.0, 1.0))
        th = theta0 + np.linspace(-half, half, n)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    rng = np.random.default_rng(12345)
    t = rng.standard_normal((n - 1, z0.size))
    t -= np.outer(t @ z0, z0)
    t /= np.linalg.norm(t, axis=-1, keepdims=True)
    pts = z0 + chord * t * rng.uniform(0, 1, size=(n - 1, 1))
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
    return np.vstack([z0, pts])


def char_set_poly(a, s, m1, directions=None, config=CharSetConfig()):
    """Characteristic-set estimate of a polynomial symbol.

    For each sphere direction the microlocal lower bound |a| >= C*lam**m1 and
    the derivative bounds |d^{alpha,beta} a| <= C'|a| lam**(-|alpha|-s|beta|)
    are probed on dilation orbits over a small cap.  A direction is flagged
    characteristic when the empirical constant C collapses (relative to the
    best direction) or decays along the orbit, or when a derivative ratio
    grows along the orbit.
    """
    if isinstance(a, Symbol):
        if a.kind != "polynomial":
            raise ValueError("char_set_poly requires a polynomial symbol")
        a = a.poly
    if not isinstance(a, PhasePoly):
        raise ValueError("char_set_poly requires a polynomial symbol")
    d = a.d
    if directions is None:
        directions = sphere_grid(d, 360)
    directions = np.asarray(directions, dtype=float)
    if directions.size == 0:
        raise ValueError("empty probe direction set")

    lams = np.geomspace(config.lambda_min, config.lambda_max, config.n_lambda)
    loglam = np.log(lams)
    n = directions.shape[0]
    min_ratio = np.empty(n)
    ratio_slope = np.empty(n)
    deriv_slope = np.empty(n)

    derivs = [(al, be) for al, be in _multi_indices(d, config.deriv_order)
              if sum(al) + sum(be) > 0]
    dpolys = [a.derivative(al, be) for al, be in derivs]
    dweights = [sum(al) + s * sum(be) for al, be in derivs]

    for i, z0 in enumerate(directions):
        cap = _cap_directions(z0, config.cap_chord, config.cap_samples)
        wx, wxi = cap[:, :d], cap[:, d:]
        X = lams[:, None, None] * wx[None]
        XI = (lams[:, None, None] ** s) * wxi[None]
        vals = np.abs(a.evaluate(X, XI))                      # (n_lambda, n_cap)
        low = np.min(vals, axis=1) / lams**m1
        min_ratio[i] = float(np.min(low))
        ratio_slope[i] = _loglog_slope(loglam, low)
        dmax = np.zeros(lams.shape)
        base = np.maximum(np.abs(a.evaluate(X, XI)), 1e-300)
        for (al, be), dp, wgt in zip(derivs, dpolys, dweights):
            r = np.abs(dp.evaluate(X, XI)) * lams[:, None] ** wgt / base
            dmax = np.maximum(dmax, np.max(r, axis=1))
        deriv_slope[i] = _loglog_slope(loglam, np.maximum(dmax, 1e-300))

    scale = float(np.max(min_ratio)) if np.max(min_ratio) > 0 else 1.0
    lower_fails = (min_ratio < config.rel_floor * scale) | (ratio_slope < -config.slope_tol)
    deriv_fails = deriv_slope > config.slope_tol
    characteristic = lower_fails | deriv_fails
    return CharSetEstimate(s=s, m1=m1, directions=directions,
                           characteristic=characteristic, min_ratio=min_ratio,
                           ratio_slope=ratio_slope, deriv_slope=deriv_slope,
                           config=config)


def _loglog_slope(logx, y):
    y = np.maximum(np.asarray(y, dtype=float), 1e-300)
    return float(np.polyfit(logx, np.log(y), 1)[0])


# ---------------------------------------------------------------------------
# asymptotic sums
# ---------------------------------------------------------------------------


def asymptotic_sum(terms, s, max_check_order=2, t_cap=2.0**40, n_check=160, seed=3):
    """Assemble a finite asymptotic sum sum_j phi(t_j^-1 x, t_j^-s xi) a_j.

    ``terms`` is a list of (Symbol, m_j) with strictly decreasing orders.
    Each excision scale t_j is doubled until the scaled term obeys the
    2**-j * mu_s**(m_j + 1 - |alpha| - s|beta|) bound (checked for
    |alpha + beta| <= min(j, max_check_order) on a probe set straddling the
    excision transition).  Returns (Symbol, list of t_j).
    """
    orders = [m for _, m in terms]
    if any(m2 >= m1 for m1, m2 in zip(orders, orders[1:])):
        raise ValueError("term orders must be strictly decreasing")
    d = terms[0][0].d

    def excised(sym_t):
        sym, t = sym_t

        def f(x, xi, sym=sym, t=t):
            nrm = np.sqrt(np.sum((np.atleast_1d(x) / t) ** 2, axis=-1)
                          + np.sum((np.atleast_1d(xi) / t**s) ** 2, axis=-1))
            return smoothstep(2.0 * nrm - 1.0) * sym.evaluate(x, xi)

        return f

    rng = np.random.default_rng(seed)
    ts = []
    for j, (sym, m_j) in enumerate(terms, start=1):
        jmax = min(j, max_check_order)
        t = 1.0
        while t <= t_cap:
            probe = Symbol.from_callable(excised((sym, t)), d=d, s=s)
            ok = True
            dirs = sphere_grid(d, max(8, n_check // 16), seed=seed + j)
            lams = t * np.geomspace(0.45, 4.0, 10)
            wx, wxi = dirs[:, :d], dirs[:, d:]
            X = (lams[:, None, None] * wx[None]).reshape(-1, d)
            XI = ((lams[:, None, None] ** s) * wxi[None]).reshape(-1, d)
            mu = mu_weight(X, XI, s)
            for alpha, beta in _multi_indices(d, jmax):
                bound = 2.0 ** (-j) * mu ** (m_j + 1 - sum(alpha) - s * sum(beta))
                vals = np.abs(probe.derivative(alpha, beta, X, XI, s=s))
                if np.any(vals > bound + 1e-12):
                    ok = False
                    break
            if ok:
                break
            t *= 2.0
        else:
            raise RuntimeError(
                f"no excision scale up to {t_cap:g} satisfied the bound for term {j}")
        ts.append(t)

    fns = [excised((sym, t)) for (sym, _), t in zip(terms, ts)]

    def total(x, xi):
        acc = fns[0](x, xi)
        for f in fns[1:]:
            acc = acc + f(x, xi)
        return acc

    out = Symbol.from_callable(total, d=d, order_m=orders[0], s=s, label="asymptotic sum")
    return out, ts
