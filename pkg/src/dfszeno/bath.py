"""Bosonic environment coupled to J_z: dephasing phase, displacements, vacuum traces.

Per mode the bath displacement after time ``t`` is::

    f_k(t) = -(lam g_k / w_k) (1 - exp(i w_k t))

and every bath quantity the perturbation engine needs reduces to three
single-time functions of the spectral model:

``alpha(t)``
    ``sum_k (lam g_k / w_k)^2 (w_k t - sin w_k t)``
``displacement_norm2(t)``
    ``sum_k |f_k(t)|^2 = sum_k 2 (lam g_k / w_k)^2 (1 - cos w_k t)``
``phase_drift(t)``
    ``sum_k (lam g_k / w_k)^2 sin w_k t``

For the continuum model ``R(w) = w^2 exp(-w/wc) / (2 wc^3)`` with ``g = 1`` the
mode sums become integrals with closed forms; the quadrature versions are kept
as independent checks and as a fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .spin import parse_sign

QUAD_UPPER = 40.0  # integrate to 40 wc; the neglected tail is below 1e-15 relative


@dataclass(frozen=True)
class DiscreteModes:
    """Finite set of bath modes ``((g_1, w_1), (g_2, w_2), ...)``."""

    modes: tuple

    def __post_init__(self):
        modes = tuple((float(g), float(w)) for g, w in self.modes)
        if not modes:
            raise ValueError("at least one bath mode is required")
        if any(not w > 0 for _, w in modes):
            raise ValueError("mode frequencies must be positive")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def parse(cls, text: str) -> "DiscreteModes":
        """Parse ``"g:w,g:w"``."""
        modes = []
        for item in text.split(","):
            g, _, w = item.partition(":")
            modes.append((float(g), float(w)))
        return cls(tuple(modes))

    @property
    def g(self) -> np.ndarray:
        return np.array([m[0] for m in self.modes])

    @property
    def w(self) -> np.ndarray:
        return np.array([m[1] for m in self.modes])

    def _weights(self, lam):
        return (lam * self.g / self.w) ** 2

    def alpha(self, t, lam):
        wt = np.multiply.outer(np.asarray(t, dtype=float), self.w)
        return np.sum(self._weights(lam) * (wt - np.sin(wt)), axis=-1)

    def displacement_norm2(self, t, lam):
        wt = np.multiply.outer(np.asarray(t, dtype=float), self.w)
        return np.sum(self._weights(lam) * 4.0 * np.sin(0.5 * wt) ** 2, axis=-1)

    def phase_drift(self, t, lam):
        wt = np.multiply.outer(np.asarray(t, dtype=float), self.w)
        return np.sum(self._weights(lam) * np.sin(wt), axis=-1)

    def alpha_rate_bound(self, lam) -> float:
        return float(np.sum(2.0 * (lam * self.g) ** 2 / self.w))

    def max_frequency(self) -> float:
        return float(np.max(self.w))

    def describe(self) -> str:
        return ",".join(f"{g!r}:{w!r}" for g, w in self.modes)


def _z_minus_sin(z):
    """``z - sin z`` without cancellation for small ``z``."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 0.1
    zs = np.where(small, z, 0.0)
    z2 = zs * zs
    series = zs * z2 / 6.0 * (1 - z2 / 20.0 * (1 - z2 / 42.0 * (1 - z2 / 72.0 * (1 - z2 / 110.0))))
    return np.where(small, series, z - np.sin(np.where(small, 0.0, z)))


@dataclass(frozen=True)
class ContinuumBath:
    """Non-ohmic continuum ``R(w) = (w^2 / 2 wc^3) exp(-w / wc)`` with unit coupling.

    ``method="closed"`` uses the analytic Laplace-transform results,
    ``method="quad"`` integrates over frequency numerically.
    """

    cutoff: float
    method: str = "closed"

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError("cutoff frequency must be positive")
        if self.method not in ("closed", "quad"):
            raise ValueError("method must be 'closed' or 'quad'")

    def density(self, w):
        wc = self.cutoff
        return w**2 / (2 * wc**3) * np.exp(-w / wc)

    # closed forms -------------------------------------------------------

    def alpha_closed(self, t, lam):
        t = np.asarray(t, dtype=float)
        x2 = (self.cutoff * t) ** 2
        return lam**2 * t / (2 * self.cutoff) * x2 / (1 + x2)

    def displacement_norm2_closed(self, t, lam):
        t = np.asarray(t, dtype=float)
        return lam**2 * t**2 / (1 + (self.cutoff * t) ** 2)

    def phase_drift_closed(self, t, lam):
        t = np.asarray(t, dtype=float)
        return lam**2 * t / (2 * self.cutoff * (1 + (self.cutoff * t) ** 2))

    # quadrature ----------------------------------------------------------

    def _quad_scalar(self, t: float, lam: float, which: str) -> float:
        # Substituting w = wc u: R(w) dw / w^2 = exp(-u) du / (2 wc^2).
        wc = self.cutoff
        x = wc * abs(t)
        pref = lam**2 / (2 * wc**2)
        kw = dict(epsabs=0.0, epsrel=1e-12, limit=2000)
        if x == 0.0:
            return 0.0
        if x <= 1.0:
            if which == "alpha":
                f = lambda u: math.exp(-u) * float(_z_minus_sin(u * x))  # noqa: E731
            elif which == "norm2":
                f = lambda u: math.exp(-u) * 4.0 * math.sin(0.5 * u * x) ** 2  # noqa: E731
            else:
                f = lambda u: math.exp(-u) * math.sin(u * x)  # noqa: E731
            val = integrate.quad(f, 0.0, QUAD_UPPER, **kw)[0]
        else:
            expo = lambda u: math.exp(-u)  # noqa: E731
            if which == "alpha":
                lin = integrate.quad(lambda u: u * math.exp(-u), 0.0, QUAD_UPPER, **kw)[0]
                osc = integrate.quad(expo, 0.0, QUAD_UPPER, weight="sin", wvar=x, **kw)[0]
                val = lin * x - osc
            elif which == "norm2":
                flat = integrate.quad(expo, 0.0, QUAD_UPPER, **kw)[0]
                osc = integrate.quad(expo, 0.0, QUAD_UPPER, weight="cos", wvar=x, **kw)[0]
                val = 2.0 * (flat - osc)
            else:
                val = integrate.quad(expo, 0.0, QUAD_UPPER, weight="sin", wvar=x, **kw)[0]
        if which == "drift" and t < 0:
            val = -val
        return pref * val

    def _quad(self, t, lam, which):
        return np.vectorize(lambda s: self._quad_scalar(float(s), lam, which), otypes=[float])(t)

    def alpha_quad(self, t, lam):
        return self._quad(t, lam, "alpha")

    def displacement_norm2_quad(self, t, lam):
        return self._quad(t, lam, "norm2")

    def phase_drift_quad(self, t, lam):
        return self._quad(t, lam, "drift")

    # dispatch ------------------------------------------------------------

    def alpha(self, t, lam):
        return self.alpha_closed(t, lam) if self.method == "closed" else self.alpha_quad(t, lam)

    def displacement_norm2(self, t, lam):
        if self.method == "closed":
            return self.displacement_norm2_closed(t, lam)
        return self.displacement_norm2_quad(t, lam)

    def phase_drift(self, t, lam):
        if self.method == "closed":
            return self.phase_drift_closed(t, lam)
        return self.phase_drift_quad(t, lam)

    def alpha_rate_bound(self, lam) -> float:
        # d/dt of t y/(1+y), y = (wc t)^2, peaks at 9/8.
        return 9.0 / 8.0 * lam**2 / (2 * self.cutoff)

    def max_frequency(self) -> float:
        return 0.0

    def asymptotic_norm2(self, lam) -> float:
        return lam**2 / self.cutoff**2

    def describe(self) -> str:
        return f"continuum(cutoff={self.cutoff!r})"


def validate_closed_forms(bath: ContinuumBath, lam: float, times=None, rtol: float = 1e-8):
    """Compare each closed form against quadrature; returns {name: max relative error}."""
    if times is None:
        times = np.logspace(-3, 3, 30) / bath.cutoff
    times = np.asarray(times, dtype=float)
    out = {}
    for name in ("alpha", "displacement_norm2", "phase_drift"):
        closed = getattr(bath, name + "_closed")(times, lam)
        quad = getattr(bath, name + "_quad")(times, lam)
        scale = np.maximum(np.abs(quad), np.finfo(float).tiny)
        out[name] = float(np.max(np.where(quad == closed, 0.0, np.abs(closed - quad) / scale)))
    return out


def resolve_continuum(bath: ContinuumBath, lam: float) -> ContinuumBath:
    """Return ``bath`` if its closed forms pass validation, else a quadrature-backed copy."""
    if bath.method == "quad" or lam == 0:
        return bath
    errs = validate_closed_forms(bath, lam)
    if max(errs.values()) > 1e-8:
        return ContinuumBath(bath.cutoff, method="quad")
    return bath


# -- public per-quantity API ------------------------------------------------


def alpha(t, lam: float, spec):
    """Accumulated dephasing phase alpha(t); ``t`` must be non-negative."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("alpha requires t >= 0")
    return spec.alpha(t, lam)


def f_amp(w: float, t, lam: float, g: float = 1.0):
    """Displacement amplitude of a single mode of frequency ``w``."""
    if not w > 0:
        raise ValueError("mode frequency must be positive")
    return -(lam * g / w) * (1 - np.exp(1j * w * np.asarray(t, dtype=float)))


def overlap_s(t1, t2, sign, lam: float, spec):
    """``sum_k |f_k(t1) -/+ f_k(t2)|^2`` for sign '-' / '+'."""
    s = parse_sign(sign)
    diff = spec.displacement_norm2(np.asarray(t1) - np.asarray(t2), lam)
    if s < 0:
        return diff
    return 2 * spec.displacement_norm2(t1, lam) + 2 * spec.displacement_norm2(t2, lam) - diff


def overlap_phase(t1, t2, lam: float, spec):
    """``Im sum_k f_k(t1) conj(f_k(t2))``."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    return spec.phase_drift(t2, lam) - spec.phase_drift(t1, lam) + spec.phase_drift(t1 - t2, lam)


def vacuum_correlation(a, b, t1, t2, lam: float, spec):
    """``<0| exp(a gamma(t1)) exp(b gamma(t2)) |0>`` for the multimode vacuum.

    Composition of displacements gives ``exp(i a b Im sum f1 f2*) exp(-|a f1 + b f2|^2 / 2)``;
    the phase sign is pinned by the truncated-Fock oracle.
    """
    sa, sb = parse_sign(a), parse_sign(b)
    norm2 = overlap_s(t1, t2, "+" if sa == sb else "-", lam, spec)
    return np.exp(-0.5 * norm2 + 1j * sa * sb * overlap_phase(t1, t2, lam, spec))


def stationary_factor(delta, lam: float, spec):
    """``B(d) = exp(-S(d)/2 - i q(d))``: the time-translation-invariant part of C_{-+}.

    ``vacuum_correlation('-', '+', t1, t2) = B(t1 - t2) exp(i q(t1)) exp(-i q(t2))``.
    """
    delta = np.asarray(delta, dtype=float)
    return np.exp(-0.5 * spec.displacement_norm2(delta, lam) - 1j * spec.phase_drift(delta, lam))


@dataclass(frozen=True)
class NarrowSplit:
    """``B(d) = B_inf + N(d)`` with ``N`` concentrated on ``|d| <~ 1/wc``."""

    b_inf: float
    integral: float  # int_{-inf}^{inf} N(d) dd (real by conjugate symmetry)


def narrow_split(lam: float, bath: ContinuumBath) -> NarrowSplit:
    wc = bath.cutoff
    s_inf = bath.asymptotic_norm2(lam)
    b_inf = math.exp(-0.5 * s_inf)

    def re_n(x):
        d = x / wc
        return float((stationary_factor(d, lam, bath) - b_inf).real)

    # substitute d = x / wc; the remainder decays like 1/x^2
    val = integrate.quad(re_n, 0.0, np.inf, epsabs=0.0, epsrel=1e-9, limit=500)[0]
    return NarrowSplit(b_inf, 2.0 * val / wc)


SpectralModel = DiscreteModes | ContinuumBath
