"""Oracle catalog: distributions with analytically known anisotropic wave
front sets, plus the metaplectic operations that act on them.

Each catalog entry pairs an :class:`~anisogabor.tfa.AnalyticDistribution`
with a rule mapping the anisotropy parameter s to the exact singular
direction set on the unit sphere of phase space.  The chirp rules follow
the three regimes of the phase order m:

* s = m - 1: the graph of the principal part's derivative (equality in
  d = 1 when the phase is even or odd, inclusion otherwise);
* s > m - 1: the position axis (R \\ 0) x {0} (equality for even/odd phase);
* 0 < s < m - 1, nonvanishing principal part: {0} x (R \\ 0) (equality for
  even phase; inclusion only for odd phase).

Deltas and their derivatives occupy the frequency axis for every s;
polynomials and plane waves the position axis; Schwartz entries are empty.
The Airy signal has the exact sets {(-t^2, t)} at s = 1/2 and
{(t, 0): t < 0} at s = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import project
from .tfa import AnalyticDistribution, Signal

__all__ = [
    "FourierModulusEvaluator",
    "GroundTruthWF",
    "OracleError",
    "fourier_evaluator",
    "generate_oracle",
    "ground_truth",
    "metaplectic",
    "oracle_names",
    "sample_distribution",
]


class OracleError(ValueError):
    """Unknown oracle name or unsupported parameter combination."""


@dataclass(frozen=True)
class GroundTruthWF:
    """Exact singular set on the sphere: a finite list of unit directions.

    ``equality`` False means the analytic statement is an inclusion
    (estimate must be a subset of the listed directions) rather than an
    identity.  An empty direction list with equality=True is the Schwartz
    case.
    """

    s: float
    directions: np.ndarray
    equality: bool = True
    label: str = ""

    def is_empty(self):
        return self.directions.size == 0


def _dirs(*vecs):
    if not vecs:
        return np.zeros((0, 2))
    return np.array([v / np.linalg.norm(v) for v in map(np.asarray, vecs)], dtype=float)


_X_AXIS = (np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
_XI_AXIS = (np.array([0.0, 1.0]), np.array([0.0, -1.0]))


def _proj_dir(x, xi, s):
    px, pxi = project(np.array([float(x)]), np.array([float(xi)]), s)
    return np.array([px[0], pxi[0]])


def _chirp_truth(dist, s):
    phase = np.array(dist.phase, dtype=float)
    m = len(phase) - 1
    cm = phase[-1]
    parity = dist.parity()
    if abs(s - (m - 1)) < 1e-12:
        # graph of d/dx of the principal part: points (t, m cm t^{m-1})
        plus = _proj_dir(1.0, m * cm, s)
        minus = _proj_dir(-1.0, m * cm * (-1.0) ** (m - 1), s)
        return GroundTruthWF(s, _dirs(plus, minus), equality=parity is not None,
                             label="chirp graph")
    if s > m - 1:
        return GroundTruthWF(s, _dirs(*_X_AXIS), equality=parity is not None,
                             label="position axis")
    # 0 < s < m - 1 requires a nonvanishing principal part (true for d = 1)
    return GroundTruthWF(s, _dirs(*_XI_AXIS), equality=parity == "even",
                         label="frequency axis")


def _airy_truth(s):
    if abs(s - 0.5) < 1e-12:
        return GroundTruthWF(s, _dirs(_proj_dir(-1.0, 1.0, s), _proj_dir(-1.0, -1.0, s)),
                             equality=True, label="airy parabola")
    if abs(s - 1.0) < 1e-12:
        return GroundTruthWF(s, _dirs(np.array([-1.0, 0.0])), equality=True,
                             label="airy half-axis")
    if s < 0.5:
        return GroundTruthWF(s, _dirs(*_XI_AXIS), equality=True,
                             label="frequency axis")
    raise OracleError(f"no exact airy wave front set catalogued for s={s}")


_CATALOG = {
    "delta": lambda p: AnalyticDistribution.delta(int(p.get("alpha", 0)),
                                                  float(p.get("x0", 0.0))),
    "monomial": lambda p: AnalyticDistribution.monomial(int(p.get("alpha", 1))),
    "one": lambda p: AnalyticDistribution.plane_wave(0.0),
    "plane_wave": lambda p: AnalyticDistribution.plane_wave(float(p.get("xi0", 1.0))),
    "gaussian": lambda p: AnalyticDistribution.gaussian(),
    "hermite": lambda p: AnalyticDistribution.hermite(int(p.get("k", 1))),
    "chirp2": lambda p: AnalyticDistribution.poly_chirp(
        [0.0, 0.0, float(p.get("coeff", 1.0))]),
    "chirp3": lambda p: AnalyticDistribution.poly_chirp(
        [0.0, 0.0, 0.0, float(p.get("coeff", 1.0))]),
    "chirp4": lambda p: AnalyticDistribution.poly_chirp(
        [0.0, 0.0, 0.0, 0.0, float(p.get("coeff", 1.0))]),
    "airy": lambda p: AnalyticDistribution.airy(),
}


def oracle_names():
    return sorted(_CATALOG)


def generate_oracle(name, params=None):
    """Look up a catalog entry: returns (distribution, truth) with
    ``truth(s) -> GroundTruthWF``."""
    params = dict(params or {})
    if name not in _CATALOG:
        raise OracleError(f"unknown oracle {name!r}; known: {', '.join(oracle_names())}")
    dist = _CATALOG[name](params)

    def truth(s):
        return ground_truth(dist, s)

    return dist, truth


def ground_truth(dist, s):
    """Exact singular directions of a catalog distribution at parameter s."""
    if s <= 0:
        raise OracleError("s must be positive")
    kind = dist.kind
    if kind == "delta":
        return GroundTruthWF(s, _dirs(*_XI_AXIS), equality=True, label="frequency axis")
    if kind == "airy":
        return _airy_truth(s)
    if kind == "exppoly":
        if dist.phase is not None:
            return _chirp_truth(dist, s)
        expo = np.array(dist.expo, dtype=complex)
        if np.any(expo.real < 0):          # Gaussian factor: Schwartz class
            return GroundTruthWF(s, _dirs(), equality=True, label="schwartz")
        deg = len(expo) - 1
        while deg > 0 and expo[deg] == 0:
            deg -= 1
        if deg <= 1:                        # polynomial times plane wave
            return GroundTruthWF(s, _dirs(*_X_AXIS), equality=True,
                                 label="position axis")
        return _chirp_truth(
            AnalyticDistribution.poly_chirp(list(np.imag(expo))), s)
    raise OracleError(f"no catalogued wave front set for kind {kind!r}")


# ---------------------------------------------------------------------------
# metaplectic operations
# ---------------------------------------------------------------------------


def metaplectic(dist, kind, param=None):
    """Metaplectic generators acting on catalog members.

    kind "fourier": the Fourier transform (closed only where the image is
    again a catalog kind); "dilate": u -> |A|^{1/2} u(A .) for invertible
    scalar A; "chirp_mul": u -> exp(i/2 B y^2) u.  Sampled signals support
    "chirp_mul" pointwise.
    """
    if kind == "dilate":
        A = float(param)
        if A == 0:
            raise ValueError("dilation matrix must be invertible")
        return _dilate(dist, A)
    if kind == "chirp_mul":
        B = float(param)
        return _chirp_mul(dist, B)
    if kind == "fourier":
        return _fourier(dist)
    raise ValueError(f"unknown metaplectic kind {kind!r}")


def _dilate(dist, A):
    root = np.sqrt(abs(A))
    if dist.kind == "exppoly":
        amp = np.array(dist.amp, dtype=complex)
        amp = amp * (A ** np.arange(amp.size))
        expo = np.array(dist.expo, dtype=complex)
        expo = expo * (A ** np.arange(expo.size))
        phase = None
        if dist.phase is not None:
            ph = np.array(dist.phase) * (A ** np.arange(len(dist.phase)))
            phase = tuple(ph)
        return AnalyticDistribution(kind="exppoly", amp=tuple(amp), expo=tuple(expo),
                                    phase=phase, scale=dist.scale * root,
                                    label=f"dilate({A:g}) {dist.label}")
    if dist.kind == "delta":
        # (D^a delta_{x0})(A y) = A^{-a} |A|^{-1} D^a delta_{x0/A}
        scale = dist.scale * root * A ** (-dist.alpha) / abs(A)
        return AnalyticDistribution(kind="delta", alpha=dist.alpha, x0=dist.x0 / A,
                                    scale=scale, label=f"dilate({A:g}) {dist.label}")
    raise ValueError(f"dilation is not closed on kind {dist.kind!r}")


def _chirp_mul(dist, B):
    if dist.kind == "exppoly":
        expo = np.array(dist.expo, dtype=complex)
        if expo.size < 3:
            expo = np.concatenate([expo, np.zeros(3 - expo.size, dtype=complex)])
        expo[2] += 0.5j * B
        phase = None
        if dist.phase is not None:
            ph = list(dist.phase) + [0.0] * max(0, 3 - len(dist.phase))
            ph[2] += 0.5 * B
            phase = tuple(ph)
        return AnalyticDistribution(kind="exppoly", amp=dist.amp, expo=tuple(expo),
                                    phase=phase, scale=dist.scale,
                                    label=f"chirp_mul({B:g}) {dist.label}")
    if dist.kind == "delta" and dist.alpha == 0:
        return AnalyticDistribution(kind="delta", alpha=0, x0=dist.x0,
                                    scale=dist.scale * np.exp(0.5j * B * dist.x0**2),
                                    label=f"chirp_mul({B:g}) {dist.label}")
    if dist.kind == "sampled":
        y = dist.signal.grid.x
        samples = dist.signal.samples * np.exp(0.5j * B * y * y)
        return AnalyticDistribution.from_signal(Signal(samples, dist.signal.grid))
    raise ValueError(f"chirp multiplication is not closed on kind {dist.kind!r}")


def _fourier(dist):
    sqrt2pi = np.sqrt(2.0 * np.pi)
    if dist.kind == "delta":
        # F(D^a delta_{x0}) = (2 pi)^{-1/2} xi^a e^{-i x0 xi}
        amp = np.zeros(dist.alpha + 1, dtype=complex)
        amp[-1] = dist.scale / sqrt2pi
        return AnalyticDistribution(kind="exppoly", amp=tuple(amp),
                                    expo=(0.0, -1j * dist.x0),
                                    label=f"F {dist.label}")
    if dist.kind == "exppoly":
        expo = np.array(dist.expo, dtype=complex)
        deg = len(expo) - 1
        while deg > 0 and expo[deg] == 0:
            deg -= 1
        amp = np.array(dist.amp, dtype=complex)
        if deg <= 1 and np.all(amp[1:] == 0 if amp.size > 1 else True):
            # plane wave e^{i xi0 y} -> sqrt(2 pi) delta_{xi0}
            xi0 = expo[1].imag if deg == 1 else 0.0
            if deg == 1 and abs(expo[1].real) > 1e-12:
                raise ValueError("Fourier image is not a catalog kind")
            return AnalyticDistribution(kind="delta", alpha=0, x0=xi0,
                                        scale=dist.scale * sqrt2pi * np.exp(expo[0]),
                                        label=f"F {dist.label}")
        if deg == 0 and amp.size >= 1:
            # polynomial: x^a -> sqrt(2 pi) i^{|a|} ... via D^a delta_0
            nz = np.nonzero(amp)[0]
            if nz.size == 1:
                a = int(nz[0])
                scale = dist.scale * amp[a] * np.exp(expo[0]) * sqrt2pi * (-1.0) ** a
                return AnalyticDistribution(kind="delta", alpha=a, x0=0.0, scale=scale,
                                            label=f"F {dist.label}")
        raise ValueError("Fourier image is not a catalog kind; "
                         "use fourier_evaluator for modulus work")
    raise ValueError(f"fourier is not closed on kind {dist.kind!r}")


class FourierModulusEvaluator:
    """Modulus-level STFT evaluator of the Fourier transform of ``ev``'s signal.

    Uses |V_{Fw}(Fu)(a, b)| = |V_w u(-b, a)|, the metaplectic identity of the
    standard symplectic rotation; combined with window invariance of the
    wave front set this is exact for modulus-based estimation.
    """

    def __init__(self, ev):
        self.inner = ev
        self.method = ev.method
        self.dist = ev.dist
        self.window = ev.window

    def stft_log_abs(self, x, xi):
        return self.inner.stft_log_abs(-np.asarray(xi), np.asarray(x))

    def stft(self, x, xi):
        raise NotImplementedError("the Fourier wrapper exposes magnitudes only")

    def lambda_cap(self, direction, s, hi=None):
        # ray(d, lam) probes the inner evaluator at (-lam^s d_xi, lam d_x)
        a, b = abs(float(direction[0])), abs(float(direction[1]))
        C = getattr(self.inner, "closed_form_cap", 1e8)
        cap = hi if hi is not None else np.inf
        if a > 0:
            cap = min(cap, C / a)
        if b > 0:
            cap = min(cap, (C / b) ** (1.0 / s))
        return cap


def fourier_evaluator(ev):
    return FourierModulusEvaluator(ev)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_distribution(dist, grid, taper=0.0):
    """Sample an evaluable catalog member on a grid (deltas are refused).

    ``taper`` > 0 rolls the samples smoothly to zero over that width at both
    grid ends.  This leaves every value in [-T + taper, T - taper] untouched
    (so finite-range decay profiles are unchanged) while removing the
    wrap-around jump that pollutes spectral operator application.
    """
    if dist.kind == "delta":
        raise OracleError("derivatives of deltas are never exposed as samples")
    vals = dist.value(grid.x)
    if taper > 0.0:
        from .symbols import smoothstep

        T = grid.half_width
        vals = vals * smoothstep((T - np.abs(grid.x)) / taper)
    return Signal(vals, grid)
