"""Discrete Weyl calculus on truncated 1-D grids.

The t-quantization of a symbol a(x, xi) acts with kernel

    K(x, y) = (2 pi)^-1 \\int e^{i (x - y) xi} a((1 - t) x + t y, xi) d xi,

discretized here by the grid's discrete Fourier dual.  With n points at
spacing dx on [-T, T) and dual frequencies xi_j = j * pi / T the matrix is

    A[k, l] = (1/n) sum_j a((1-t) x_k + t x_l, xi_j) exp(2 pi i (k-l) j / n),

which reproduces the identity for a = 1 and spectral differentiation for
a = xi exactly.  t = 1/2 is the Weyl choice (Hermitian for real symbols),
t = 0 is Kohn-Nirenberg.  The module also provides the symbol-level change
of quantization parameter, the exact polynomial Weyl product expansion, the
cross-Wigner pairing, and a finite-iteration microlocal parametrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .polynomials import PhasePoly
from .symbols import Symbol, _multi_indices

__all__ = [
    "GridSpec",
    "GridSymbol",
    "OperatorMatrix",
    "ParametrixResult",
    "SingularSymbolError",
    "WignerTable",
    "interior",
    "parametrix",
    "quantization_shift",
    "quantize",
    "weyl_apply_via_wigner",
    "weyl_product_expansion",
    "wigner",
]


class SingularSymbolError(ValueError):
    """Raised when a parametrix division meets |a| below the floor inside supp chi."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of n (power of two, >= 8) points on [-T, T).

    dx = 2T/n; the discrete Fourier dual carries frequencies j * pi / T for
    j in [-n/2, n/2), so the Nyquist bound is xi_max = pi / dx.
    """

    half_width: float
    n: int

    def __post_init__(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError("n must be a power of two, at least 8")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def dx(self):
        return 2.0 * self.half_width / self.n

    @property
    def dxi(self):
        return np.pi / self.half_width

    @property
    def xi_max(self):
        return np.pi / self.dx

    @property
    def x(self):
        return -self.half_width + self.dx * np.arange(self.n)

    @property
    def xi_fft(self):
        """Dual frequencies in FFT (wrap-around) order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def xi_sorted(self):
        return np.fft.fftshift(self.xi_fft)

    def interior(self, margin=0.125):
        m = int(np.floor(self.n * margin))
        return slice(m, self.n - m)


def interior(v, grid, margin=0.125):
    """Restrict samples (axis 0) to the grid interior; square matrices lose the
    boundary rows and columns."""
    sl = grid.interior(margin)
    if v.ndim == 2 and v.shape[0] == v.shape[1] == grid.n:
        return v[sl, sl]
    return v[sl]


@dataclass
class OperatorMatrix:
    """Dense discretization of a quantized symbol on a GridSpec."""

    matrix: np.ndarray
    t: float
    grid: GridSpec
    label: str = ""
    warning: str | None = None

    def apply(self, f):
        return self.matrix @ np.asarray(f, dtype=complex)

    def adjoint(self):
        return OperatorMatrix(self.matrix.conj().T, self.t, self.grid,
                              label=f"adj({self.label})", warning=self.warning)

    def to_json_obj(self):
        return {
            "t": self.t,
            "half_width": self.grid.half_width,
            "n": self.grid.n,
            "label": self.label,
            "warning": self.warning,
            "rows": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
        }


def _eval_symbol(a, X, XI):
    """Evaluate a Symbol/PhasePoly/callable on broadcast scalar arrays (d = 1)."""
    X = np.asarray(X, dtype=float)
    XI = np.asarray(XI, dtype=float)
    if isinstance(a, Symbol):
        return a.evaluate(X[..., None], XI[..., None])
    if isinstance(a, PhasePoly):
        return a.evaluate(X[..., None], XI[..., None])
    return np.asarray(a(X, XI), dtype=complex)


def quantize(a, t, grid, xi_budget=1e12):
    """t-quantization of a symbol as a dense n x n matrix.

    Polynomial symbols take a separable fast path (outer position factors
    times circulant spectral-derivative blocks); t in {0, 1/2, 1} has an
    FFT fast path for callables; other t falls back to a row-chunked sum.
    A max |a| on the sampled set beyond ``xi_budget`` flags a truncation
    warning on the returned matrix.
    """
    n = grid.n
    x = grid.x
    xi = grid.xi_fft
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    warning = None

    poly = None
    if isinstance(a, PhasePoly):
        poly = a
    elif isinstance(a, Symbol) and a.kind == "polynomial":
        poly = a.poly

    if poly is not None:
        if poly.d != 1:
            raise ValueError("quantize supports d = 1 grids")
        A = np.zeros((n, n), dtype=complex)
        w = (1.0 - t) * x[:, None] + t * x[None, :]
        maxval = 0.0
        for (alpha, beta), c in poly.coeffs.items():
            p, q = alpha[0], beta[0]
            circ = np.fft.ifft(xi.astype(complex) ** q)[idx]
            A += c * (w**p) * circ
            maxval = max(maxval, abs(c) * np.max(np.abs(w)) ** p * grid.xi_max**q)
        if maxval > xi_budget:
            warning = "symbol magnitude exceeds the xi-truncation budget"
        return OperatorMatrix(A, t, grid, label=getattr(a, "label", "poly"),
                              warning=warning)

    # callable symbol
    if t == 0.5:
        mids = -grid.half_width + 0.5 * grid.dx * np.arange(2 * n - 1)
        vals = _eval_symbol(a, mids[:, None], xi[None, :])
        B = np.fft.ifft(vals, axis=1)
        ksum = np.arange(n)[:, None] + np.arange(n)[None, :]
        A = B[ksum, idx]
        maxval = float(np.max(np.abs(vals)))
    elif t == 0.0:
        vals = _eval_symbol(a, x[:, None], xi[None, :])
        B = np.fft.ifft(vals, axis=1)
        A = B[np.arange(n)[:, None], idx]
        maxval = float(np.max(np.abs(vals)))
    elif t == 1.0:
        vals = _eval_symbol(a, x[:, None], xi[None, :])
        B = np.fft.ifft(vals, axis=1)
        A = B[np.arange(n)[None, :].repeat(n, axis=0), idx]
        maxval = float(np.max(np.abs(vals)))
    else:
        A = np.empty((n, n), dtype=complex)
        phase = np.exp(2j * np.pi * np.arange(n)[:, None] * np.arange(n)[None, :] / n)
        maxval = 0.0
        for k in range(n):
            w = (1.0 - t) * x[k] + t * x
            vals = _eval_symbol(a, w[:, None], xi[None, :])
            maxval = max(maxval, float(np.max(np.abs(vals))))
            A[k, :] = (vals * phase[idx[k]]).mean(axis=1)
        if maxval > xi_budget:
            warning = "symbol magnitude exceeds the xi-truncation budget"
        return OperatorMatrix(A, t, grid, label=getattr(a, "label", "callable"),
                              warning=warning)

    if maxval > xi_budget:
        warning = "symbol magnitude exceeds the xi-truncation budget"
    return OperatorMatrix(A, t, grid, label=getattr(a, "label", "callable"),
                          warning=warning)


# ---------------------------------------------------------------------------
# change of quantization parameter
# ---------------------------------------------------------------------------


@dataclass
class GridSymbol:
    """Symbol sampled on an x-grid times its dual xi-grid (both in sorted order)."""

    values: np.ndarray
    grid: GridSpec
    warning: str | None = None

    @property
    def x(self):
        return self.grid.x

    @property
    def xi(self):
        return self.grid.xi_sorted


def sample_symbol(a, grid):
    X, XI = np.meshgrid(grid.x, grid.xi_sorted, indexing="ij")
    return GridSymbol(_eval_symbol(a, X, XI), grid)


def quantization_shift(a, from_t, to_t, boundary_warn=1e-8):
    """Move a symbol between quantization parameters.

    Polynomial symbols are shifted exactly by the terminating series

        b = sum_k (i (from_t - to_t))^k / k! * <D_x, D_xi>^k a,

    with <D_x, D_xi> = -sum_i d_{x_i} d_{xi_i}.  Grid symbols are shifted by
    the corresponding 2-D Fourier multiplier exp(i (from_t - to_t) w_x w_xi);
    significant mass on the sampling boundary sets a warning.
    """
    tau = from_t - to_t

    poly = None
    if isinstance(a, PhasePoly):
        poly = a
    elif isinstance(a, Symbol) and a.kind == "polynomial":
        poly = a.poly
    if poly is not None:
        out = PhasePoly(poly.d)
        term = poly
        k = 0
        while term.coeffs:
            out = out + term * ((1j * tau) ** k / factorial(k) if k else 1.0)
            nxt = PhasePoly(poly.d)
            for i in range(poly.d):
                ei = tuple(1 if j == i else 0 for j in range(poly.d))
                nxt = nxt + term.derivative(ei, ei)
            term = -1.0 * nxt
            k += 1
            if k > 400:
                raise RuntimeError("shift series failed to terminate")
        return out if isinstance(a, PhasePoly) else Symbol.from_poly(
            out, getattr(a, "order_m", None), getattr(a, "s", None))

    if not isinstance(a, GridSymbol):
        raise ValueError("quantization_shift needs a polynomial or a GridSymbol")
    v = a.values
    nx, nxi = v.shape
    m = max(2, nx // 16)
    frame = np.abs(np.concatenate([v[:m].ravel(), v[-m:].ravel(),
                                   v[:, :m].ravel(), v[:, -m:].ravel()]))
    warning = a.warning
    total = float(np.max(np.abs(v))) or 1.0
    if float(np.max(frame)) > boundary_warn * total:
        warning = "symbol mass on the sampling boundary; shift may ring"

    # uniform sampling offsets cancel in the fft -> multiply -> ifft round trip,
    # so the index-based transform realizes the multiplier exactly
    wx = 2.0 * np.pi * np.fft.fftfreq(nx, d=a.grid.dx)
    wxi = 2.0 * np.pi * np.fft.fftfreq(nxi, d=a.grid.dxi)
    vh = np.fft.fft2(v)
    vh *= np.exp(1j * tau * wx[:, None] * wxi[None, :])
    return GridSymbol(np.fft.ifft2(vh), a.grid, warning=warning)


# ---------------------------------------------------------------------------
# Weyl product
# ---------------------------------------------------------------------------


def weyl_product_expansion(a, b, order=None):
    """Exact Weyl product of polynomial symbols.

    Sums ((-1)^|beta| / (alpha! beta!)) 2^{-|alpha+beta|}
    (D_x^beta d_xi^alpha a)(D_x^alpha d_xi^beta b) with D = -i d; the series
    terminates for polynomials and then (a # b)^w = a^w b^w exactly.
    """
    pa = a.poly if isinstance(a, Symbol) else a
    pb = b.poly if isinstance(b, Symbol) else b
    if not isinstance(pa, PhasePoly) or not isinstance(pb, PhasePoly):
        raise ValueError("weyl_product_expansion requires polynomial symbols")
    if pa.d != pb.d:
        raise ValueError("dimension mismatch")
    d = pa.d
    dxa, dxia = pa.degrees_split()
    dxb, dxib = pb.degrees_split()
    amax = min(dxia, dxb)   # alpha differentiates a in xi and b in x
    bmax = min(dxa, dxib)
    if order is not None:
        amax, bmax = min(amax, order), min(bmax, order)
    out = PhasePoly(d)
    for alpha, beta in _multi_indices(d, amax + bmax):
        na, nb = sum(alpha), sum(beta)
        if na > amax or nb > bmax or (order is not None and na + nb > order):
            continue
        fa = pa.derivative(beta, alpha)   # d_x^beta d_xi^alpha a
        if not fa.coeffs:
            continue
        fb = pb.derivative(alpha, beta)
        if not fb.coeffs:
            continue
        cf = ((-1.0) ** nb) * ((-1j) ** (na + nb)) / (
            np.prod([factorial(k) for k in alpha]) *
            np.prod([factorial(k) for k in beta]) * 2.0 ** (na + nb))
        out = out + (fa * fb) * cf
    if isinstance(a, Symbol) or isinstance(b, Symbol):
        ma = getattr(a, "order_m", None)
        mb = getattr(b, "order_m", None)
        m = (ma + mb) if (ma is not None and mb is not None) else None
        return Symbol.from_poly(out, m, getattr(a, "s", getattr(b, "s", None)))
    return out


# ---------------------------------------------------------------------------
# cross-Wigner pairing
# ---------------------------------------------------------------------------


@dataclass
class WignerTable:
    values: np.ndarray      # (n_x, n_nu)
    x: np.ndarray
    nu: np.ndarray
    grid: GridSpec


def wigner(f, g, grid):
    """Cross-Wigner table W(g, f)(x, nu) = int g(x + y/2) conj(f(x - y/2)) e^{-i y nu} dy.

    Sampled on the signal grid in x and on the half-spaced dual grid in nu
    (the natural "doubled" phase-space grid); W(f, f) is real up to rounding.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    n = grid.n
    if f.shape != (n,) or g.shape != (n,):
        raise ValueError("signals must live on the grid")
    taus = np.arange(-n // 2, n // 2)
    vals = np.zeros((n, n), dtype=complex)
    ks = np.arange(n)
    for it, tau in enumerate(taus):
        kp = ks + tau
        km = ks - tau
        ok = (kp >= 0) & (kp < n) & (km >= 0) & (km < n)
        col = np.zeros(n, dtype=complex)
        col[ok] = g[kp[ok]] * np.conj(f[km[ok]])
        vals[:, it] = col
    # y = 2 tau dx; FFT index q gives nu_q = q * pi / (n dx) = q * dxi / 2
    work = np.fft.ifftshift(vals, axes=1)
    Wf = np.fft.fft(work, axis=1) * (2.0 * grid.dx)
    q = np.arange(-n // 2, n // 2)
    nu = q * grid.dxi / 2.0
    Wf = np.fft.fftshift(Wf, axes=1)
    return WignerTable(values=Wf, x=grid.x, nu=nu, grid=grid)


def weyl_apply_via_wigner(a, f, g, grid):
    """Pairing (a^w f, g) computed as (2 pi)^-1 (a, W(g, f)) on the Wigner grid."""
    W = wigner(f, g, grid)
    X, NU = np.meshgrid(W.x, W.nu, indexing="ij")
    av = _eval_symbol(a, X, NU)
    dnu = W.nu[1] - W.nu[0]
    return complex(np.sum(av * np.conj(W.values)) * grid.dx * dnu / (2.0 * np.pi))


def pairing_via_matrix(a, t, f, g, grid):
    """Reference pairing (a_t f, g) through the operator matrix."""
    A = quantize(a, t, grid)
    return complex(np.vdot(g, A.apply(f)) * grid.dx)


# ---------------------------------------------------------------------------
# microlocal parametrix
# ---------------------------------------------------------------------------


@dataclass
class ParametrixResult:
    b: Symbol
    residual: Symbol
    pieces: list = field(default_factory=list)
    expansion_order: int = 2


def _expansion_callable(bsym, apoly, K, s):
    """Pointwise b # a truncated at |alpha + beta| <= K (a polynomial, exact side)."""
    d = apoly.d
    terms = []
    for alpha, beta in _multi_indices(d, K):
        na, nb = sum(alpha), sum(beta)
        da = apoly.derivative(alpha, beta)   # D_x^alpha d_xi^beta a side
        if not da.coeffs:
            continue
        cf = ((-1.0) ** nb) * ((-1j) ** (na + nb)) / (
            np.prod([factorial(k) for k in alpha]) *
            np.prod([factorial(k) for k in beta]) * 2.0 ** (na + nb))
        terms.append((alpha, beta, da, cf))

    def r(x, xi):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        acc = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), dtype=complex)
        for alpha, beta, da, cf in terms:
            bd = bsym.derivative(beta, alpha, x, xi, s=s)  # D_x^beta d_xi^alpha b
            acc = acc + cf * bd * da.evaluate(x, xi)
        return acc

    return r


def parametrix(a, chi, s, m1, iterations=2, expansion_order=2,
               division_floor=1e-12, nested_fd_step=2e-3):
    """Microlocal parametrix b with b # a = chi + residual.

    Starts from b_0 = chi / a and iterates b_{j+1} = -(residual_j) / a; the
    residual order drops by (1 + s) per step.  The symbol must stay above
    ``division_floor`` in modulus wherever the cutoff is active.
    """
    apoly = a.poly if isinstance(a, Symbol) else a
    if not isinstance(apoly, PhasePoly):
        raise ValueError("parametrix requires a polynomial symbol")
    d = apoly.d

    def safe_div(num_fn):
        def f(x, xi):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            xi = np.atleast_1d(np.asarray(xi, dtype=float))
            av = apoly.evaluate(x, xi)
            nv = num_fn(x, xi)
            bad = (np.abs(av) < division_floor) & (np.abs(nv) > 1e-12)
            if np.any(bad):
                raise SingularSymbolError(
                    "symbol modulus below the division floor inside the cutoff support")
            av = np.where(np.abs(av) < division_floor, 1.0, av)
            return np.where(np.abs(nv) > 0, nv / av, 0.0)
        return f

    b0 = Symbol.from_callable(safe_div(lambda x, xi: chi.evaluate(x, xi)),
                              d=d, order_m=-m1, s=s, fd_step=nested_fd_step)
    pieces = [b0]
    # residual of the partial sum: r_j = (sum b_i) # a - chi, truncated expansion
    exp0 = _expansion_callable(b0, apoly, expansion_order, s)
    chi_f = chi.evaluate

    def r0(x, xi):
        return exp0(x, xi) - chi_f(x, xi)

    residual_fn = r0
    for j in range(iterations):
        rj = residual_fn
        bj = Symbol.from_callable(safe_div(lambda x, xi, rj=rj: -rj(x, xi)),
                                  d=d, order_m=-m1 - (1 + s) * (j + 1), s=s,
                                  fd_step=nested_fd_step * 4.0 ** (j + 1))
        pieces.append(bj)
        expj = _expansion_callable(bj, apoly, expansion_order, s)

        def residual_fn(x, xi, rj=rj, expj=expj):
            return rj(x, xi) + expj(x, xi)

    def b_total(x, xi):
        acc = pieces[0].evaluate(x, xi)
        for p in pieces[1:]:
            acc = acc + p.evaluate(x, xi)
        return acc

    b = Symbol.from_callable(b_total, d=d, order_m=-m1, s=s,
                             fd_step=nested_fd_step, label="parametrix")
    r = Symbol.from_callable(residual_fn, d=d, s=s, label="parametrix residual")
    return ParametrixResult(b=b, residual=r, pieces=pieces,
                            expansion_order=expansion_order)
