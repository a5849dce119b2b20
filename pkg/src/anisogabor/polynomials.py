"""Exact multivariate polynomials on phase space.

A ``PhasePoly`` is a finite complex linear combination of monomials
x^alpha * xi^beta with multi-indices alpha, beta over R^d.  It supports the
ring operations, exact partial derivatives, vectorized evaluation, the
(x, xi) swap, and round-tripping through the JSON coefficient-list format

    [{"ax": [...], "axi": [...], "re": ..., "im": ...}, ...]

used by the CLI (legacy key spellings "aξ" / "a_xi" are accepted on read).
"""

from __future__ import annotations

import json
from math import comb

import numpy as np

__all__ = ["PhasePoly"]


def _key(alpha, beta):
    return tuple(int(a) for a in alpha), tuple(int(b) for b in beta)


class PhasePoly:
    """Polynomial in (x, xi) with complex coefficients, stored sparsely."""

    def __init__(self, d=1, coeffs=None):
        self.d = int(d)
        self.coeffs = {}
        if coeffs:
            for (alpha, beta), c in coeffs.items():
                alpha, beta = _key(alpha, beta)
                if len(alpha) != self.d or len(beta) != self.d:
                    raise ValueError("multi-index length must equal d")
                c = complex(c)
                if c != 0:
                    self.coeffs[(alpha, beta)] = self.coeffs.get((alpha, beta), 0) + c

    # -- constructors ------------------------------------------------------

    @classmethod
    def monomial(cls, alpha, beta, c=1.0, d=None):
        alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
        beta = (beta,) if np.isscalar(beta) else tuple(beta)
        if d is None:
            d = len(alpha)
        return cls(d, {(alpha, beta): c})

    @classmethod
    def x(cls, i=0, d=1):
        alpha = tuple(1 if j == i else 0 for j in range(d))
        return cls(d, {(alpha, (0,) * d): 1.0})

    @classmethod
    def xi(cls, i=0, d=1):
        beta = tuple(1 if j == i else 0 for j in range(d))
        return cls(d, {((0,) * d, beta): 1.0})

    @classmethod
    def constant(cls, c, d=1):
        return cls(d, {((0,) * d, (0,) * d): c})

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, PhasePoly):
            if other.d != self.d:
                raise ValueError("dimension mismatch")
            return other
        return PhasePoly.constant(complex(other), self.d)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            v = out.get(k, 0) + c
            if v == 0:
                out.pop(k, None)
            else:
                out[k] = v
        return PhasePoly(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return PhasePoly(self.d, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PhasePoly):
            return PhasePoly(self.d, {k: c * complex(other) for k, c in self.coeffs.items()})
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        out = {}
        for (a1, b1), c1 in self.coeffs.items():
            for (a2, b2), c2 in other.coeffs.items():
                k = (tuple(i + j for i, j in zip(a1, a2)), tuple(i + j for i, j in zip(b1, b2)))
                v = out.get(k, 0) + c1 * c2
                if v == 0:
                    out.pop(k, None)
                else:
                    out[k] = v
        return PhasePoly(self.d, out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n != int(n) or n < 0:
            raise ValueError("only nonnegative integer powers")
        out = PhasePoly.constant(1.0, self.d)
        base = self
        n = int(n)
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conj(self):
        return PhasePoly(self.d, {k: np.conj(c) for k, c in self.coeffs.items()})

    def swap(self):
        """b(x, xi) = a(xi, x)."""
        return PhasePoly(self.d, {(b, a): c for (a, b), c in self.coeffs.items()})

    # -- calculus ----------------------------------------------------------

    def derivative(self, alpha, beta):
        """Exact partial derivative d_x^alpha d_xi^beta."""
        alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
        beta = (beta,) if np.isscalar(beta) else tuple(beta)
        out = {}
        for (a, b), c in self.coeffs.items():
            if any(a[i] < alpha[i] for i in range(self.d)):
                continue
            if any(b[i] < beta[i] for i in range(self.d)):
                continue
            f = c
            na, nb = list(a), list(b)
            for i in range(self.d):
                for k in range(alpha[i]):
                    f *= na[i]
                    na[i] -= 1
                for k in range(beta[i]):
                    f *= nb[i]
                    nb[i] -= 1
            if f != 0:
                k = (tuple(na), tuple(nb))
                out[k] = out.get(k, 0) + f
        return PhasePoly(self.d, out)

    def shift_x(self, h):
        """a(x + h, xi) for a constant vector h (exact Taylor shift)."""
        h = np.atleast_1d(np.asarray(h, dtype=complex))
        out = PhasePoly(self.d)
        for (a, b), c in self.coeffs.items():
            term = PhasePoly.constant(c, self.d)
            for i in range(self.d):
                xi_pow = PhasePoly(self.d)
                for k in range(a[i] + 1):
                    mono = tuple(k if j == i else 0 for j in range(self.d))
                    xi_pow = xi_pow + PhasePoly(
                        self.d, {(mono, (0,) * self.d): comb(a[i], k) * h[i] ** (a[i] - k)}
                    )
                term = term * xi_pow
            mono_b = PhasePoly(self.d, {((0,) * self.d, b): 1.0})
            out = out + term * mono_b
        return out

    def evaluate(self, x, xi):
        """Evaluate at points; x, xi have trailing axis d (broadcast batch axes)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), dtype=complex)
        for (a, b), c in self.coeffs.items():
            term = np.full(out.shape, c, dtype=complex)
            for i in range(self.d):
                if a[i]:
                    term = term * x[..., i] ** a[i]
                if b[i]:
                    term = term * xi[..., i] ** b[i]
            out = out + term
        return out if out.ndim else complex(out)

    # -- metadata ----------------------------------------------------------

    def degree(self):
        """Total degree (|alpha| + |beta|); -inf convention -> -1 for the zero poly."""
        if not self.coeffs:
            return -1
        return max(sum(a) + sum(b) for a, b in self.coeffs)

    def degrees_split(self):
        """(max |alpha|, max |beta|) over the support."""
        if not self.coeffs:
            return (0, 0)
        return (max(sum(a) for a, _ in self.coeffs), max(sum(b) for _, b in self.coeffs))

    def __eq__(self, other):
        if not isinstance(other, PhasePoly):
            return NotImplemented
        return self.d == other.d and self.coeffs == other.coeffs

    def allclose(self, other, tol=1e-12):
        diff = self - other
        return all(abs(c) <= tol for c in diff.coeffs.values())

    def __repr__(self):
        if not self.coeffs:
            return "PhasePoly(0)"
        parts = []
        for (a, b), c in sorted(self.coeffs.items()):
            mono = "".join(f"x{i}^{p}" for i, p in enumerate(a) if p)
            mono += "".join(f"xi{i}^{p}" for i, p in enumerate(b) if p)
            parts.append(f"({c:g})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # -- serialization -----------------------------------------------------

    def to_json_obj(self):
        items = []
        for (a, b), c in sorted(self.coeffs.items()):
            items.append({"ax": list(a), "axi": list(b), "re": float(c.real), "im": float(c.imag)})
        return items

    def to_json(self):
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, items, d=None):
        coeffs = {}
        for it in items:
            a = it["ax"]
            b = it.get("axi", it.get("aξ", it.get("a_xi")))
            if b is None:
                raise ValueError("coefficient entry is missing the xi exponents")
            if d is None:
                d = len(a)
            coeffs[(tuple(a), tuple(b))] = complex(it.get("re", 0.0), it.get("im", 0.0))
        return cls(d if d is not None else 1, coeffs)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_obj(json.loads(text))
