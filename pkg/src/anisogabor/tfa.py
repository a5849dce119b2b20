"""STFT engine: closed forms, oscillatory quadrature, grid transform, inversion.

The short-time Fourier transform used throughout is

    V_w u (x, xi) = (2 pi)^{-1/2} * integral u(y) conj(w(y - x)) e^{-i y xi} dy,

i.e. (2 pi)^{-d/2} (u, M_xi T_x w) with d = 1.  With a unit-norm window this
normalization satisfies the energy identity ||V_w u||_{L2(R^2)} = ||u||_{L2}
and the standard inversion formula.

Three evaluation routes coexist:

* closed forms.  Windows are polynomial-times-Gaussian; signals that are
  polynomial-times-exp(polynomial of degree <= 3 with imaginary cubic term)
  reduce to complex Gaussian moments or to the Airy function of a complex
  argument; derivatives of deltas and the Airy signal are special-cased.
  Every closed form exposes an underflow-safe log-magnitude path, which is
  what the wave-front estimator consumes.
* adaptive oscillatory quadrature: Gauss-Legendre panels sized by a local
  phase-rate bound with a hard panel cap, for evaluable signals without a
  closed form (e.g. chirps of degree >= 4, custom windows).
* plain windowed Riemann sums for sampled signals, spectrally accurate up
  to a recorded frequency cap below the grid Nyquist.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import special

__all__ = [
    "AnalyticDistribution",
    "CappedEvaluationError",
    "QuadratureSpec",
    "Signal",
    "StftEvaluator",
    "Window",
    "airy_poly_integral",
    "gauss_poly_integral",
    "invert_stft_grid",
    "make_window",
    "moyal_ratio",
    "stft_grid",
]

_LOG_FLOOR = -745.0  # log of the smallest positive double


class CappedEvaluationError(RuntimeError):
    """Oscillation budget exceeded; carries the largest usable |xi|."""

    def __init__(self, msg, xi_cap=None):
        super().__init__(msg)
        self.xi_cap = xi_cap


# ---------------------------------------------------------------------------
# small helpers for 1-d polynomials (ascending coefficients, axis 0 = degree;
# remaining axes broadcast as batch axes)
# ---------------------------------------------------------------------------


def _pderiv(c):
    c = np.asarray(c, dtype=complex)
    if c.shape[0] <= 1:
        return np.zeros((1,) + c.shape[1:], dtype=complex)
    k = np.arange(1, c.shape[0]).reshape((-1,) + (1,) * (c.ndim - 1))
    return k * c[1:]


def _pmul(c1, c2):
    c1 = np.atleast_1d(np.asarray(c1, dtype=complex))
    c2 = np.atleast_1d(np.asarray(c2, dtype=complex))
    b1 = c1.shape[1:] if c1.ndim > 1 else ()
    b2 = c2.shape[1:] if c2.ndim > 1 else ()
    batch = np.broadcast_shapes(b1, b2)
    out = np.zeros((c1.shape[0] + c2.shape[0] - 1,) + batch, dtype=complex)
    for i in range(c1.shape[0]):
        for j in range(c2.shape[0]):
            out[i + j] = out[i + j] + c1[i] * c2[j]
    return out


def _pshift(c, h):
    """Coefficients of P(y + h); h may carry batch axes."""
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    h = np.asarray(h, dtype=complex)
    K = c.shape[0] - 1
    cbatch = c.shape[1:] if c.ndim > 1 else ()
    batch = np.broadcast_shapes(cbatch, h.shape)
    out = np.zeros((K + 1,) + batch, dtype=complex)
    hp = [np.ones(batch, dtype=complex)]
    for _ in range(K):
        hp.append(hp[-1] * h)
    for k in range(K + 1):
        ck = np.broadcast_to(c[k], batch) if c.ndim > 1 else c[k] * np.ones(batch, complex)
        for j in range(k + 1):
            out[j] = out[j] + ck * comb(k, j) * hp[k - j]
    return out


def _peval(c, y):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    y = np.asarray(y)
    cbatch = c.shape[1:] if c.ndim > 1 else ()
    out = np.zeros(np.broadcast_shapes(cbatch, y.shape), dtype=complex)
    for k in range(c.shape[0] - 1, -1, -1):
        out = out * y + c[k]
    return out


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Window:
    """Analysis window; analytic kinds are P(t) exp(-t^2 / 2) with unit L2 norm."""

    kind: str                       # "gaussian" | "hermite" | "custom"
    poly: tuple = ()                # ascending complex coefficients
    k: int = 0
    samples: np.ndarray | None = None
    grid: object = None             # GridSpec, for custom windows

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "custom":
            return self._interp(t)
        return _peval(np.array(self.poly), t) * np.exp(-t * t / 2.0)

    def _interp(self, t):
        g = self.grid
        out = np.zeros(t.shape, dtype=complex)
        idx = (t - g.x[0]) / g.dx
        i0 = np.floor(idx).astype(int)
        frac = idx - i0
        ok = (i0 >= 0) & (i0 < g.n - 1)
        out[ok] = self.samples[i0[ok]] * (1 - frac[ok]) + self.samples[i0[ok] + 1] * frac[ok]
        return out

    def derivative_poly(self, order):
        """Q with w^(order)(t) = Q(t) exp(-t^2/2), via (P e)' = (P' - t P) e."""
        if self.kind == "custom":
            raise ValueError("custom windows have no analytic derivatives")
        q = np.array(self.poly, dtype=complex)
        for _ in range(order):
            q = np.polynomial.polynomial.polysub(_pderiv(q), np.concatenate([[0.0], q]))
        return q

    def fourier(self):
        """Fourier transform; again polynomial times Gaussian.

        Uses F[t g](xi) = i d/dxi F[g](xi) starting from
        F[exp(-t^2/2)] = exp(-xi^2/2) under the (2 pi)^{-1/2}, e^{-i t xi}
        convention.
        """
        if self.kind == "custom":
            raise ValueError("custom windows have no symbolic Fourier transform")
        S = np.array([1.0 + 0j])         # FT poly of t^0 * e^{-t^2/2}
        out = np.zeros(1, dtype=complex)
        for m, cm in enumerate(self.poly):
            if m:
                S = 1j * np.polynomial.polynomial.polysub(
                    _pderiv(S), np.concatenate([[0.0], S]))
            out = np.polynomial.polynomial.polyadd(out, cm * S)
        return Window(kind=self.kind, poly=tuple(out), k=self.k)

    @property
    def reach(self):
        """Radius beyond which the window is numerically negligible (< ~1e-45)."""
        if self.kind == "custom":
            return float(self.grid.half_width)
        amp = max(1.0, float(np.max(np.abs(self.poly))))
        deg = len(self.poly) - 1
        return float(np.sqrt(2.0 * (104.0 + np.log(amp))) + 2.0 * deg + 2.0)


def make_window(name="gaussian"):
    """Named window factory: "gaussian", "hermite<k>" (e.g. "hermite1")."""
    if isinstance(name, Window):
        return name
    if name == "gaussian":
        return Window(kind="gaussian", poly=(np.pi ** (-0.25),))
    if name.startswith("hermite"):
        k = int(name[len("hermite"):] or 1)
        hk = np.zeros(k + 1)
        hk[k] = 1.0
        coeffs = np.polynomial.hermite.herm2poly(hk)
        norm = (2.0**k * special.factorial(k) * np.sqrt(np.pi)) ** (-0.5)
        return Window(kind="hermite", poly=tuple(norm * coeffs), k=k)
    raise ValueError(f"unknown window {name!r}")


# ---------------------------------------------------------------------------
# signals and analytic distributions
# ---------------------------------------------------------------------------


@dataclass
class Signal:
    """Complex samples on a GridSpec (uniform grid over [-T, T))."""

    samples: np.ndarray
    grid: object

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n,):
            raise ValueError("sample count must match the grid")

    def norm_l2(self):
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.dx))


@dataclass
class AnalyticDistribution:
    """Catalog member with an exact or semi-analytic STFT.

    kind "delta":   scale * D^alpha delta_{x0}   (D = -i d/dy)
    kind "exppoly": scale * amp(y) * exp(expo(y)); covers monomials, plane
                    waves, Gaussians and polynomial chirps.  ``phase`` keeps
                    the real chirp phase when the object was built as one.
    kind "airy":    scale * Ai(y)
    kind "sampled": a Signal
    """

    kind: str
    alpha: int = 0
    x0: float = 0.0
    amp: tuple = (1.0,)
    expo: tuple = (0.0,)
    phase: tuple | None = None
    scale: complex = 1.0
    signal: Signal | None = None
    label: str = ""

    # -- factories ---------------------------------------------------------

    @classmethod
    def delta(cls, alpha=0, x0=0.0):
        return cls(kind="delta", alpha=int(alpha), x0=float(x0),
                   label=f"D^{alpha} delta_{x0:g}")

    @classmethod
    def monomial(cls, alpha=1):
        amp = tuple([0.0] * int(alpha) + [1.0])
        return cls(kind="exppoly", amp=amp, expo=(0.0,), label=f"y^{alpha}")

    @classmethod
    def plane_wave(cls, xi0=0.0):
        return cls(kind="exppoly", amp=(1.0,), expo=(0.0, 1j * xi0),
                   label=f"exp(i {xi0:g} y)")

    @classmethod
    def gaussian(cls):
        return cls(kind="exppoly", amp=(np.pi ** (-0.25),), expo=(0.0, 0.0, -0.5),
                   label="gaussian")

    @classmethod
    def hermite(cls, k=1):
        w = make_window(f"hermite{k}")
        return cls(kind="exppoly", amp=tuple(w.poly), expo=(0.0, 0.0, -0.5),
                   label=f"hermite{k}")

    @classmethod
    def poly_chirp(cls, phase_coeffs):
        """u = exp(i phi(y)) for a real polynomial phase (ascending coeffs)."""
        phase = tuple(float(c) for c in phase_coeffs)
        if len(phase) < 3 or phase[-1] == 0:
            raise ValueError("chirp phase must be a real polynomial of degree >= 2")
        return cls(kind="exppoly", amp=(1.0,), expo=tuple(1j * c for c in phase),
                   phase=phase, label=f"chirp deg {len(phase) - 1}")

    @classmethod
    def airy(cls):
        return cls(kind="airy", label="airy")

    @classmethod
    def from_signal(cls, sig):
        return cls(kind="sampled", signal=sig, label="sampled")

    # -- behaviour ---------------------------------------------------------

    def value(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "exppoly":
            return self.scale * _peval(np.array(self.amp), y) * \
                np.exp(_peval(np.array(self.expo), y))
        if self.kind == "airy":
            return self.scale * special.airy(y)[0].astype(complex)
        if self.kind == "sampled":
            g = self.grid_of()
            out = np.zeros(y.shape, dtype=complex)
            idx = (y - g.x[0]) / g.dx
            i0 = np.floor(idx).astype(int)
            fr = idx - i0
            ok = (i0 >= 0) & (i0 < g.n - 1)
            s = self.signal.samples
            out[ok] = s[i0[ok]] * (1 - fr[ok]) + s[i0[ok] + 1] * fr[ok]
            return self.scale * out
        raise ValueError("distributions of this kind have no pointwise values")

    def grid_of(self):
        return self.signal.grid if self.signal is not None else None

    def parity(self):
        """"even"/"odd"/None; for chirps this is the parity of the phase."""
        if self.kind == "delta":
            return "even" if (self.alpha % 2 == 0 and self.x0 == 0.0) else None
        if self.kind == "airy":
            return None
        if self.kind == "exppoly":
            if self.phase is not None:
                ph = np.array(self.phase)
                if np.all(ph[1::2] == 0):
                    return "even"
                if np.all(ph[0::2] == 0):
                    return "odd"
                return None
            amp = np.array(self.amp)
            expo = np.array(self.expo)
            if np.all(expo[1::2] == 0):
                if np.all(amp[1::2] == 0):
                    return "even"
                if np.all(amp[0::2] == 0):
                    return "odd"
            return None
        return None

    def chirp_degree(self):
        return (len(self.phase) - 1) if self.phase is not None else None


# ---------------------------------------------------------------------------
# closed-form engines
# ---------------------------------------------------------------------------


def gauss_poly_integral(amp, a, b, c):
    """(value, log|value|) of integral P(y) exp(-a y^2 + b y + c) dy, Re a > 0.

    Batched over trailing axes of a, b, c (amp axis 0 is the degree).  The
    log-magnitude path stays finite long after exp() under/overflows: the
    prefactor sqrt(pi/a) exp(b^2/(4a) + c) is kept in log form and only the
    bounded moment sum is evaluated directly.
    """
    amp = np.atleast_1d(np.asarray(amp, dtype=complex))
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if np.any(a.real <= 0):
        raise ValueError("gauss_poly_integral requires Re a > 0")
    mu = b / (2.0 * a)
    # moments m_k of the normalized complex Gaussian: m_0 = 1, m_1 = mu,
    # m_k = mu m_{k-1} + (k-1)/(2a) m_{k-2}
    K = amp.shape[0] - 1
    batch = np.broadcast_shapes(a.shape, b.shape, c.shape,
                                amp.shape[1:] if amp.ndim > 1 else ())
    m = [np.ones(batch, dtype=complex)]
    if K >= 1:
        m.append(mu * np.ones(batch, dtype=complex))
    for k in range(2, K + 1):
        m.append(mu * m[k - 1] + (k - 1) / (2.0 * a) * m[k - 2])
    S = np.zeros(batch, dtype=complex)
    for k in range(K + 1):
        ak = amp[k] if amp.ndim > 1 else amp[k] * np.ones(batch, complex)
        S = S + ak * m[k]
    log_pref = 0.5 * (np.log(np.pi) - np.log(a)) + b * b / (4.0 * a) + c
    with np.errstate(divide="ignore"):
        log_abs = log_pref.real + np.where(np.abs(S) > 0, np.log(np.abs(S)), -np.inf)
    val = np.exp(np.clip(log_pref.real, None, 700.0) + 1j * log_pref.imag) * S
    over = log_pref.real > 700.0
    if np.any(over):
        val = np.asarray(val, dtype=complex).copy()
        val[over] = np.inf
    return val, log_abs


def _airy_moment_tables(kmax):
    """G_k = p_k(z) Ai(z) + q_k(z) Ai'(z) where 2 pi G_k = int t^k e^{i(t^3/3 + z t)} dt."""
    P = np.polynomial.polynomial
    p = [np.array([1.0 + 0j])]
    q = [np.array([0.0 + 0j])]
    zpoly = np.array([0.0, 1.0 + 0j])
    for _ in range(kmax):
        pk, qk = p[-1], q[-1]
        p.append(-1j * P.polyadd(P.polyder(pk), P.polymul(zpoly, qk)))
        q.append(-1j * P.polyadd(pk, P.polyder(qk)))
    return p, q


def airy_poly_integral(amp, c3, c2, c1, c0):
    """(value, log|value|) of integral P(y) exp(c3 y^3 + c2 y^2 + c1 y + c0) dy.

    Requires c3 purely imaginary and nonzero, Re c2 < 0 (a Gaussian-damped
    cubic phase).  Completing the cube moves the integral onto the Airy
    function of a complex argument; polynomial amplitudes use the moment
    recursion generated by Ai'' = z Ai.  Exponentially scaled Airy values
    keep the log-magnitude finite deep into under/overflow territory.
    """
    amp = np.atleast_1d(np.asarray(amp, dtype=complex))
    c3 = np.asarray(c3, dtype=complex)
    c2 = np.asarray(c2, dtype=complex)
    c1 = np.asarray(c1, dtype=complex)
    c0 = np.asarray(c0, dtype=complex)
    if np.any(np.abs(c3.real) > 1e-9 * np.abs(c3)):
        raise ValueError("cubic coefficient must be purely imaginary")
    sigma = c3.imag
    if np.any(sigma == 0):
        raise ValueError("cubic coefficient must be nonzero")
    if np.any(c2.real >= 0):
        raise ValueError("airy_poly_integral requires Re c2 < 0")

    batch = np.broadcast_shapes(c3.shape, c2.shape, c1.shape, c0.shape,
                                amp.shape[1:] if amp.ndim > 1 else ())
    sigma = np.broadcast_to(sigma, batch).copy()
    neg = sigma < 0
    ampb = np.empty((amp.shape[0],) + batch, dtype=complex)
    for k in range(amp.shape[0]):
        ampb[k] = amp[k] if amp.ndim > 1 else amp[k]
    c3 = np.broadcast_to(c3, batch).astype(complex).copy()
    c2 = np.broadcast_to(c2, batch).astype(complex).copy()
    c1 = np.broadcast_to(c1, batch).astype(complex).copy()
    c0 = np.broadcast_to(c0, batch).astype(complex).copy()
    if np.any(neg):  # conjugate trick maps sigma -> -sigma
        for arr in (c3, c2, c1, c0):
            arr[neg] = np.conj(arr[neg])
        ampb[:, neg] = np.conj(ampb[:, neg])
        sigma[neg] = -sigma[neg]

    h = -c2 / (3.0 * c3)
    cc = 3.0 * c3 * h * h + 2.0 * c2 * h + c1
    dd = c3 * h**3 + c2 * h * h + c1 * h + c0
    kap = (3.0 * sigma) ** (-1.0 / 3.0)
    z = -1j * cc * kap

    shifted = _pshift(ampb, h)                      # P(u + h)
    eai, eaip, _, _ = special.airye(z)
    zeta = (2.0 / 3.0) * z * np.sqrt(z)             # Ai = eAi * exp(-zeta)
    p, q = _airy_moment_tables(shifted.shape[0] - 1)
    S = np.zeros(batch, dtype=complex)
    for k in range(shifted.shape[0]):
        Gk_scaled = _peval(p[k], z) * eai + _peval(q[k], z) * eaip
        S = S + shifted[k] * kap**k * Gk_scaled

    log_main = dd - zeta + np.log(2.0 * np.pi * kap)
    with np.errstate(divide="ignore"):
        log_abs = log_main.real + np.where(np.abs(S) > 0, np.log(np.abs(S)), -np.inf)
    val = np.exp(np.clip(log_main.real, None, 700.0) + 1j * log_main.imag) * S
    over = log_main.real > 700.0
    if np.any(over):
        val = np.asarray(val, dtype=complex).copy()
        val[over] = np.inf
    val = np.where(neg, np.conj(val), val)
    return val, log_abs


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive oscillatory panel quadrature parameters."""

    points_per_panel: int = 16
    phase_cap: float = np.pi / 4.0
    max_panels: int = 2**20
    min_panel: float = 1e-8


def _panel_quadrature(f, lo, hi, rate, spec):
    """Integrate f over [lo, hi] with panel widths <= phase_cap / rate(midpoint)."""
    nodes, weights = np.polynomial.legendre.leggauss(spec.points_per_panel)
    total = 0.0 + 0.0j
    y = lo
    n_panels = 0
    while y < hi:
        r = max(float(rate(y)), 1e-12)
        w = min(hi - y, max(spec.phase_cap / r, spec.min_panel))
        n_panels += 1
        if n_panels > spec.max_panels:
            raise CappedEvaluationError(
                "panel budget exceeded in oscillatory quadrature")
        mid = y + w / 2.0
        half = w / 2.0
        total += half * np.sum(weights * f(mid + half * nodes))
        y += w
    return total


def stft_quadrature(dist, window, x, xi, spec=QuadratureSpec()):
    """Direct quadrature of the defining STFT integral at a single point."""
    x = float(x)
    xi = float(xi)
    R = window.reach
    if dist.kind == "sampled":
        raise ValueError("sampled signals use the windowed-sum path")
    expo = np.array(dist.expo) if dist.kind == "exppoly" else None

    def phase_rate(y):
        r = abs(xi) + 1.0 + abs(y - x)       # window Gaussian contributes |y - x|
        if expo is not None:
            r += abs(_peval(_pderiv(expo), y))
        elif dist.kind == "airy":
            r += np.sqrt(abs(y)) + 1.0
        return r

    # budget precheck so the failure carries a usable cap
    worst = max(phase_rate(x - R), phase_rate(x + R))
    est = 2.0 * R * worst / spec.phase_cap
    if est > spec.max_panels:
        xi_cap = spec.phase_cap * spec.max_panels / (2.0 * R) - (worst - abs(xi))
        raise CappedEvaluationError(
            f"estimated {est:.3g} panels exceeds the budget", xi_cap=max(xi_cap, 0.0))

    def f(y):
        return dist.value(y) * np.conj(window.value(y - x)) * np.exp(-1j * y * xi)

    val = _panel_quadrature(f, x - R, x + R, phase_rate, spec)
    return val / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# sampled-signal path
# ---------------------------------------------------------------------------


def _sampled_stft(sig, window, x, xi, chunk=2048):
    """Windowed Riemann sum; vectorized over flat arrays x, xi in chunks."""
    g = sig.grid
    y = g.x
    u = sig.samples
    R = min(window.reach, 2.0 * g.half_width)
    half = int(np.ceil(R / g.dx)) + 1
    offs = np.arange(-half, half + 1)
    out = np.empty(x.shape, dtype=complex)
    for lo in range(0, x.size, chunk):
        xs = x[lo:lo + chunk, None]
        xis = xi[lo:lo + chunk, None]
        k0 = np.floor((xs - y[0]) / g.dx).astype(int)
        K = k0 + offs[None, :]
        ok = (K >= 0) & (K < g.n)
        Kc = np.clip(K, 0, g.n - 1)
        yy = y[Kc]
        vals = np.where(ok, u[Kc], 0.0) * np.conj(window.value(yy - xs)) \
            * np.exp(-1j * yy * xis)
        out[lo:lo + chunk] = vals.sum(axis=1)
    return out * g.dx / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# the evaluator
# ---------------------------------------------------------------------------


class StftEvaluator:
    """STFT of one distribution with one window, with point and log-magnitude
    evaluation, automatic closed-form dispatch, and per-direction validity caps."""

    def __init__(self, dist, window=None, method="auto", quad=QuadratureSpec(),
                 closed_form_cap=1e8):
        if not isinstance(dist, AnalyticDistribution):
            if isinstance(dist, Signal):
                dist = AnalyticDistribution.from_signal(dist)
            else:
                raise ValueError("dist must be an AnalyticDistribution or Signal")
        self.dist = dist
        self.window = make_window(window or "gaussian")
        self.quad = quad
        self.closed_form_cap = closed_form_cap
        if method == "auto":
            method = self._resolve_method()
        self.method = method

    def _resolve_method(self):
        if self.dist.kind == "sampled":
            return "sampled"
        if self.window.kind == "custom":
            return "quadrature"
        if self.dist.kind == "delta":
            return "closed_form"
        if self.dist.kind == "airy":
            return "closed_form"
        if self.dist.kind == "exppoly":
            expo = np.array(self.dist.expo)
            deg = len(expo) - 1
            while deg > 0 and expo[deg] == 0:
                deg -= 1
            if deg <= 2:
                return "closed_form"
            if deg == 3 and abs(expo[3].real) <= 1e-12 * abs(expo[3]):
                return "closed_form"
        return "quadrature"

    def with_window(self, window):
        return StftEvaluator(self.dist, window, quad=self.quad,
                             closed_form_cap=self.closed_form_cap)

    # -- public evaluation -------------------------------------------------

    def stft(self, x, xi):
        val, _ = self._evaluate(x, xi, need_value=True)
        return val

    def stft_log_abs(self, x, xi):
        _, la = self._evaluate(x, xi, need_value=False)
        return la

    def _evaluate(self, x, xi, need_value):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast_shapes(x.shape, xi.shape)
        xb = np.broadcast_to(x, shape).ravel()
        xib = np.broadcast_to(xi, shape).ravel()
        if self.method == "closed_form":
            if self.dist.kind == "delta":
                val, la = self._cf_delta(xb, xib)
            elif self.dist.kind == "airy":
                val, la = self._cf_airy(xb, xib)
            else:
                val, la = self._cf_exppoly(xb, xib)
        elif self.method == "sampled":
            val = _sampled_stft(self.dist.signal, self.window, xb, xib)
            val = self.dist.scale * val
            with np.errstate(divide="ignore"):
                la = np.where(np.abs(val) > 0, np.log(np.abs(val)), -np.inf)
        else:
            val = np.array([stft_quadrature(self.dist, self.window, a, b, self.quad)
                            for a, b in zip(xb, xib)], dtype=complex)
            with np.errstate(divide="ignore"):
                la = np.where(np.abs(val) > 0, np.log(np.abs(val)), -np.inf)
        val = val.reshape(shape) if val is not None else None
        la = la.reshape(shape)
        if shape == ():
            return (complex(val) if val is not None else None), float(la)
        return val, la

    # -- closed forms ------------------------------------------------------

    def _cf_delta(self, x, xi):
        alpha, x0 = self.dist.alpha, self.dist.x0
        # V(x, xi) = (2 pi)^{-1/2} e^{-i x0 xi}
        #            sum_{b <= alpha} C(alpha, b) xi^b conj((D^{alpha-b} w)(x0 - x))
        t = x0 - x
        S = np.zeros(x.shape, dtype=complex)
        for b in range(alpha + 1):
            q = self.window.derivative_poly(alpha - b)            # w^(m) poly part
            dfac = (-1j) ** (alpha - b)                           # D^m = (-i)^m d^m
            S = S + comb(alpha, b) * xi**b * np.conj(dfac * _peval(q, t))
        log_env = -t * t / 2.0
        pref = self.dist.scale / np.sqrt(2.0 * np.pi)
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(pref)) + log_env + \
                np.where(np.abs(S) > 0, np.log(np.abs(S)), -np.inf)
        val = pref * np.exp(np.clip(log_env, _LOG_FLOOR, None)) * \
            np.exp(-1j * x0 * xi) * S
        return val, la

    def _cf_exppoly(self, x, xi):
        amp = np.array(self.dist.amp, dtype=complex)
        e = np.array(self.dist.expo, dtype=complex)
        if e.size > 4:
            raise ValueError("exponent degree exceeds the closed-form budget")
        expo = np.zeros(4, dtype=complex)
        expo[: e.size] = e
        wconj = np.conj(np.array(self.window.poly, dtype=complex))
        # total amplitude A(y) * conj(P_w)(y - x)
        ampw = _pmul(amp, _pshift(wconj, -x))
        # total exponent E(y) - (y - x)^2/2 - i y xi
        c0 = expo[0] - x * x / 2.0
        c1 = expo[1] + x - 1j * xi
        c2 = expo[2] - 0.5
        c3 = expo[3] * np.ones(x.shape, dtype=complex)
        pref = self.dist.scale / np.sqrt(2.0 * np.pi)
        if np.all(expo[3] == 0):
            val, la = gauss_poly_integral(ampw, -c2, c1, c0)
        else:
            val, la = airy_poly_integral(ampw, c3, c2 * np.ones(x.shape), c1, c0)
        return pref * val, la + np.log(np.abs(pref))

    def _cf_airy(self, x, xi):
        # V(x, xi) = (2 pi)^{-1} e^{-i x xi} *
        #            int Q(xi - t) exp(i t^3/3 - (t - xi)^2/2 + i x t) dt
        # with Q the Fourier polynomial of conj(P_w).
        wc = Window(kind=self.window.kind,
                    poly=tuple(np.conj(self.window.poly)), k=self.window.k)
        Q = np.array(wc.fourier().poly, dtype=complex)
        # amplitude in t: Q(xi - t) = Qr(t - xi) with Qr(u) = Q(-u)
        Qr = Q * (-1.0) ** np.arange(Q.size)
        ampt = _pshift(Qr, -xi)
        c3 = (1j / 3.0) * np.ones(x.shape, dtype=complex)
        c2 = np.full(x.shape, -0.5, dtype=complex)
        c1 = xi + 1j * x
        c0 = -xi * xi / 2.0
        pref = self.dist.scale / (2.0 * np.pi)
        val, la = airy_poly_integral(ampt, c3, c2, c1, c0)
        return pref * np.exp(-1j * x * xi) * val, la + np.log(np.abs(pref))

    # -- validity ----------------------------------------------------------

    def lambda_cap(self, direction, s, hi=None):
        """Largest lambda such that ray(direction, lambda) stays evaluable."""
        direction = np.asarray(direction, dtype=float)
        x0, xi0 = abs(direction[0]), abs(direction[1])
        if self.method == "closed_form":
            cap = hi if hi is not None else np.inf
            if x0 > 0:
                cap = min(cap, self.closed_form_cap / x0)
            if xi0 > 0:
                cap = min(cap, (self.closed_form_cap / xi0) ** (1.0 / s))
            return cap
        if self.method == "sampled":
            g = self.dist.signal.grid
            margin = min(self.window.reach, g.half_width / 4.0)
            x_reach = g.half_width - margin
            # leave spectral room for the local signal frequency and window tail
            bw = _signal_bandwidth(self.dist.signal)
            xi_reach = max(g.xi_max - bw - 8.0, 0.25 * g.xi_max)
            cap = np.inf
            if x0 > 0:
                cap = min(cap, x_reach / x0)
            if xi0 > 0:
                cap = min(cap, (xi_reach / xi0) ** (1.0 / s))
            return cap if hi is None else min(cap, hi)
        # quadrature: respect the panel budget at the outer end of the ray
        cap = hi if hi is not None else 1e4
        lo = 1.0
        for _ in range(60):
            mid = np.sqrt(lo * cap)
            if self._quad_budget_ok(mid * direction[0], mid**s * direction[1]):
                lo = mid
            else:
                cap = mid
        return lo

    def _quad_budget_ok(self, x, xi):
        R = self.window.reach
        expo = np.array(self.dist.expo) if self.dist.kind == "exppoly" else None

        def rate(y):
            r = abs(xi) + 1.0 + abs(y - x)
            if expo is not None:
                r += abs(_peval(_pderiv(expo), y))
            elif self.dist.kind == "airy":
                r += np.sqrt(abs(y)) + 1.0
            return r

        worst = max(rate(x - R), rate(x + R))
        return 2.0 * R * worst / self.quad.phase_cap <= self.quad.max_panels


def _signal_bandwidth(sig, keep=1e-9):
    """Half-width of the band holding all but ``keep`` of the spectral mass."""
    spec = np.abs(np.fft.fft(sig.samples)) ** 2
    freqs = np.abs(2.0 * np.pi * np.fft.fftfreq(sig.grid.n, d=sig.grid.dx))
    order = np.argsort(freqs)
    c = np.cumsum(spec[order])
    if c[-1] == 0:
        return 0.0
    k = int(np.searchsorted(c, (1.0 - keep) * c[-1]))
    return float(freqs[order][min(k, sig.grid.n - 1)])


# ---------------------------------------------------------------------------
# grid STFT, inversion, Moyal
# ---------------------------------------------------------------------------


def stft_grid(sig, window=None):
    """Full STFT field V[k, j] of a sampled signal on (x_k, xi_j sorted).

    One FFT per position: V(x_k, .) = F[u * conj(T_{x_k} w)].
    """
    window = make_window(window or "gaussian")
    g = sig.grid
    u = sig.samples
    y = g.x
    V = np.empty((g.n, g.n), dtype=complex)
    for k in range(g.n):
        win = np.conj(window.value(y - y[k]))
        V[k, :] = np.fft.fft(u * win)
    # fft pairs index m with e^{-2 pi i m j / n}; the grid offset y_0 adds the
    # factor e^{-i y_0 xi_j} per column
    V *= np.exp(-1j * y[0] * g.xi_fft)[None, :]
    return np.fft.fftshift(V, axes=1) * g.dx / np.sqrt(2.0 * np.pi)


def invert_stft_grid(V, window, grid):
    """Inverse transform u(y) = (2 pi)^{-1/2} iint V(x, xi) e^{i y xi} w(y - x) dx dxi.

    Requires a unit-norm window (the analytic kinds are unit by construction).
    """
    window = make_window(window)
    if window.kind == "custom":
        nrm = float(np.sqrt(np.sum(np.abs(window.samples) ** 2) * window.grid.dx))
        if abs(nrm - 1.0) > 1e-8:
            raise ValueError("inversion requires a unit-norm window")
    y = grid.x
    n = grid.n
    out = np.zeros(n, dtype=complex)
    Vfft = np.fft.ifftshift(V, axes=1) * np.exp(1j * y[0] * grid.xi_fft)[None, :]
    for k in range(n):
        # sum over xi at fixed x_k: sum_j V(x_k, xi_j) e^{i y_m xi_j} dxi
        row = np.fft.ifft(Vfft[k, :]) * n * grid.dxi
        out += row * window.value(y - y[k])
    return out * grid.dx / np.sqrt(2.0 * np.pi)


def moyal_ratio(sig, window=None):
    """||V||^2 / ||u||^2; equals 1 for a unit window up to discretization."""
    V = stft_grid(sig, window)
    g = sig.grid
    num = float(np.sum(np.abs(V) ** 2) * g.dx * g.dxi)
    den = float(np.sum(np.abs(sig.samples) ** 2) * g.dx)
    return num / den
