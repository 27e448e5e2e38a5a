"""Second-order fidelity of a DFS computation perturbed by ``eps * J_x``.

In the interaction picture the perturbation reads
``eps U0^dag (Ub^dag J_x Ub) U0`` with ``Ub`` the free bath + J_z-coupling
propagator. Acting on the initial DFS state it produces two pieces that live in
the M_z = 2 and M_z = 0 sectors::

    |chi_+(t)> = U0^dag J_+ U0 |phi0>,   |chi_-(t)> = U0^dag J_- U0 |phi0>

and the second-order fidelity is ``F(t) = 1 - 2 Re int_0^t dt1 int_0^t1 dt2 K(t1, t2)``
with::

    K = eps^2 [Gamma_pp C_mp + Gamma_mm C_pm]
    Gamma_pp = 1/4 exp(3i(alpha1 - alpha2)) <chi_+(t1)|chi_+(t2)>
    Gamma_mm = 1/4 exp(-i(alpha1 - alpha2)) <chi_-(t1)|chi_-(t2)>

``K(t2, t1) = conj(K(t1, t2))``, so the triangle integral equals half the
square integral and ``F = 1 - int int_{[0,t]^2} K``. Writing the bath factor as
``B(t1 - t2) exp(i q(t1)) exp(-i q(t2))`` turns the square sum into a
block-Toeplitz quadratic form over panel node vectors, evaluated by
``kernels.square_rows``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import bath as bathmod
from . import dfs, kernels
from .bath import ContinuumBath, DiscreteModes
from .gates import GateKind, build_commuting, gate_hamiltonian
from .spin import HermitianPropagator, ladder, parse_sign, sector_indices

M2 = sector_indices(2)
M0 = sector_indices(0)
GT1_TOL = 1e-6


class QuadratureError(ArithmeticError):
    """Two refinement levels of the time quadrature disagree beyond tolerance."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


@dataclass(frozen=True)
class PerturbationParams:
    """Physical parameters (hbar = 1). Times are in the same units as ``1/epsilon``."""

    epsilon: float = 1.0
    lam: float = 2000.0
    spectrum: object = field(default_factory=lambda: ContinuumBath(1e5))
    gate: GateKind = GateKind.CNOT
    tau: float = 1.0
    phi0: tuple = tuple(dfs.default_initial_state())
    schedule: tuple | None = None

    def __post_init__(self):
        if self.epsilon < 0 or self.lam < 0:
            raise ValueError("epsilon and lambda must be non-negative")
        if not self.tau > 0:
            raise ValueError("gate time must be positive")
        object.__setattr__(self, "gate", GateKind.parse(self.gate))
        phi = np.asarray(self.phi0, dtype=complex).reshape(4)
        if abs(np.linalg.norm(phi) - 1) > dfs.NORM_TOL:
            raise ValueError("initial DFS state must be normalized")
        object.__setattr__(self, "phi0", tuple(phi))
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(self.schedule))

    @classmethod
    def dimensionless(cls, lambda_ratio=2000.0, nu_c=1e5, epsilon=1.0, tau_eps=1.0,
                      gate=GateKind.CNOT, phi0=None, modes=None):
        """Build from ``Lambda = lam/eps``, ``nu_c = wc/eps`` and ``eps*tau``.

        ``modes`` (a ``DiscreteModes`` in units of ``eps``) replaces the continuum.
        """
        scale = epsilon if epsilon > 0 else 1.0
        if modes is not None:
            spectrum = DiscreteModes(tuple((g, w * scale) for g, w in modes.modes))
        else:
            spectrum = ContinuumBath(nu_c * scale)
        return cls(
            epsilon=epsilon,
            lam=lambda_ratio * epsilon,
            spectrum=spectrum,
            gate=gate,
            tau=tau_eps / scale,
            phi0=tuple(dfs.default_initial_state() if phi0 is None else phi0),
        )

    @property
    def phi0_vec(self) -> np.ndarray:
        return np.array(self.phi0, dtype=complex)


@dataclass(frozen=True)
class QuadratureSettings:
    """Composite Gauss-Legendre rule on uniform panels.

    The panel width is the smaller of ``2 pi / (margin * rate)`` (``rate`` is the
    fastest phase in the kernel) and ``grid spacing / grid_fraction``.
    """

    nodes: int = 4
    step: float | None = None
    margin: float = 8.0
    grid_fraction: int = 16
    narrow_threshold: float = 10.0
    check: bool = True
    tol: float = 1e-6
    method: str = "auto"  # auto | direct | narrow
    threads: int = 1
    kernel: str = "spectral"  # spectral | direct
    backend: str | None = None  # direct kernel only

    def __post_init__(self):
        if self.kernel not in kernels.ALGORITHMS:
            raise ValueError(f"kernel must be one of {sorted(kernels.ALGORITHMS)}, got {self.kernel!r}")


# -- system propagation -------------------------------------------------------


class SystemEvolution:
    """``U0(t)`` for a constant gate Hamiltonian or a piecewise-constant schedule.

    After the last schedule segment the system idles (``H0 = 0``).
    """

    def __init__(self, p: PerturbationParams):
        if p.schedule:
            self.segments = [(seg.duration, HermitianPropagator(build_commuting(seg.coupling)))
                             for seg in p.schedule]
            self.starts = np.concatenate([[0.0], np.cumsum([d for d, _ in self.segments])])
            self.entry = [np.eye(16, dtype=complex)]
            for dur, prop in self.segments:
                self.entry.append(prop(dur) @ self.entry[-1])
            self.spread = max(prop.spread for _, prop in self.segments)
        else:
            self.segments = None
            self.prop = HermitianPropagator(gate_hamiltonian(p.gate, p.tau))
            self.spread = self.prop.spread

    def _rows(self, vecs, t, adjoint):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        vecs = np.broadcast_to(vecs, (len(t), 16))
        if self.segments is None:
            prop = self.prop
            coeff = vecs @ prop.vecs.conj()
            sgn = 1j if adjoint else -1j
            return (coeff * np.exp(sgn * np.outer(t, prop.energies))) @ prop.vecs.T
        out = np.empty((len(t), 16), dtype=complex)
        for i, (ti, v) in enumerate(zip(t, vecs)):
            u = self.unitary(ti)
            out[i] = (u.conj().T if adjoint else u) @ v
        return out

    def unitary(self, t: float) -> np.ndarray:
        if self.segments is None:
            return self.prop(t)
        s = int(np.searchsorted(self.starts, t, side="right")) - 1
        if s >= len(self.segments):
            return self.entry[-1]
        return self.segments[s][1](t - self.starts[s]) @ self.entry[s]

    def forward(self, psi, t):
        return self._rows(psi, t, adjoint=False)

    def backward(self, vecs, t):
        return self._rows(vecs, t, adjoint=True)


def chi(sign, t, p: PerturbationParams, evolution: SystemEvolution | None = None) -> np.ndarray:
    """``U0^dag(t) J_sign U0(t) |phi0>``; one 16-vector per time (squeezed for scalar ``t``)."""
    s = parse_sign(sign)
    evo = evolution or SystemEvolution(p)
    scalar = np.ndim(t) == 0
    psi = evo.forward(dfs.encode(p.phi0_vec, normalize=True), t)
    out = evo.backward(psi @ ladder(s).T, t)
    return out[0] if scalar else out


def _chis(t, p, evo=None):
    evo = evo or SystemEvolution(p)
    psi = evo.forward(dfs.encode(p.phi0_vec, normalize=True), t)
    return evo.backward(psi @ ladder(1).T, t), evo.backward(psi @ ladder(-1).T, t)


def _gamma(sa, sb, t1, t2, p):
    """Literal c-number functions (without eps), as matrices over t1 x t2."""
    t1 = np.atleast_1d(np.asarray(t1, dtype=float))
    t2 = np.atleast_1d(np.asarray(t2, dtype=float))
    evo = SystemEvolution(p)
    cp1, cm1 = _chis(t1, p, evo)
    cp2, cm2 = _chis(t2, p, evo)
    a1 = bathmod.alpha(t1, p.lam, p.spectrum)[:, None]
    a2 = bathmod.alpha(t2, p.lam, p.spectrum)[None, :]
    left = cp1 if sa > 0 else cm1
    right = cp2 if sb > 0 else cm2
    overlap = left.conj() @ right.T
    phase = {
        (1, 1): 3j * (a1 - a2),
        (1, -1): 1j * (3 * a1 + a2),
        (-1, 1): -1j * (a1 + 3 * a2),
        (-1, -1): -1j * (a1 - a2),
    }[(sa, sb)]
    return 0.25 * np.exp(phase) * overlap


def _squeeze(m, t1, t2):
    return m[0, 0] if np.ndim(t1) == 0 and np.ndim(t2) == 0 else m


def gamma_pp(t1, t2, p):
    return _squeeze(_gamma(1, 1, t1, t2, p), t1, t2)


def gamma_mm(t1, t2, p):
    return _squeeze(_gamma(-1, -1, t1, t2, p), t1, t2)


def gamma_pm(t1, t2, p):
    return _squeeze(_gamma(1, -1, t1, t2, p), t1, t2)


def gamma_mp(t1, t2, p):
    return _squeeze(_gamma(-1, 1, t1, t2, p), t1, t2)


def kernel(t1, t2, p: PerturbationParams, cross_tol: float = 1e-13):
    """``K(t1, t2)`` assembled term by term from the Gamma functions and vacuum traces.

    This is the slow reference path; it also checks that the cross terms vanish.
    """
    t1a = np.atleast_1d(np.asarray(t1, dtype=float))
    t2a = np.atleast_1d(np.asarray(t2, dtype=float))
    T1, T2 = np.meshgrid(t1a, t2a, indexing="ij")
    corr = lambda a, b: bathmod.vacuum_correlation(a, b, T1, T2, p.lam, p.spectrum)  # noqa: E731
    cross = max(np.max(np.abs(_gamma(1, -1, t1a, t2a, p))), np.max(np.abs(_gamma(-1, 1, t1a, t2a, p))))
    if cross > cross_tol:
        raise AssertionError(f"cross terms Gamma_+-/Gamma_-+ do not vanish: {cross:.3e}")
    k = p.epsilon**2 * (_gamma(1, 1, t1a, t2a, p) * corr("-", "+") + _gamma(-1, -1, t1a, t2a, p) * corr("+", "-"))
    return _squeeze(k, t1, t2)


def first_order_overlaps(t, p: PerturbationParams):
    """``(<phi0|chi_+(t)>, <phi0|chi_-(t)>)``; both vanish because the sectors differ."""
    phi = dfs.encode(p.phi0_vec, normalize=True)
    cp, cm = _chis(np.atleast_1d(t), p)
    return cp @ phi.conj(), cm @ phi.conj()


# -- fast quadrature ------------------------------------------------------------


def node_vectors(t, p: PerturbationParams, evo=None) -> np.ndarray:
    """Per-time vectors ``v`` with ``K(t1, t2) = eps^2/4 B(t1 - t2) <v(t1)|v(t2)>``.

    ``v = exp(-i q) (exp(-3i alpha) chi_+|M=2  (+)  exp(i alpha) chi_-|M=0)``.
    """
    t = np.asarray(t, dtype=float)
    cp, cm = _chis(t.ravel(), p, evo)
    a = bathmod.alpha(t.ravel(), p.lam, p.spectrum)
    q = p.spectrum.phase_drift(t.ravel(), p.lam)
    v = np.concatenate(
        [np.exp(-3j * a - 1j * q)[:, None] * cp[:, M2], np.exp(1j * a - 1j * q)[:, None] * cm[:, M0]],
        axis=1,
    )
    return v.reshape(t.shape + (v.shape[-1],))


def fastest_rate(p: PerturbationParams, evo: SystemEvolution | None = None) -> float:
    evo = evo or SystemEvolution(p)
    return max(3.0 * p.spectrum.alpha_rate_bound(p.lam), evo.spread, p.spectrum.max_frequency())


@dataclass
class QuadraturePlan:
    step: float
    panels: int
    narrow: bool


# ||chi_+||^2 + ||chi_-||^2 = 2 (<J^2> - 1) on the M_z = +1 sector, at most 10
_CHI_NORM2_MAX = 10.0


def narrow_error_estimate(p: PerturbationParams, t_max: float) -> float:
    """Rough upper bound on what the narrow path misses.

    The node phases exp(-i q(t)) carry a spike of height ~c/2 and width ~1/wc
    at t = 0 that coarse panels cannot resolve; its weight scales as
    ``eps^2 lam^2 / wc^3`` per unit time.
    """
    wc = p.spectrum.cutoff
    return p.epsilon**2 * p.lam**2 / (2.0 * wc**3) * t_max * _CHI_NORM2_MAX


def plan_quadrature(times, p: PerturbationParams, q: QuadratureSettings, evo=None) -> QuadraturePlan:
    times = np.asarray(times, dtype=float)
    t_max = float(times.max())
    pts = np.unique(np.concatenate([[0.0], times]))
    spacing = float(np.min(np.diff(pts))) if len(pts) > 1 else t_max
    if q.step is not None:
        h_max = float(q.step)
    else:
        rate = fastest_rate(p, evo)
        h_max = spacing / q.grid_fraction
        if rate > 0:
            h_max = min(h_max, 2 * math.pi / (q.margin * rate))
    narrow = False
    if isinstance(p.spectrum, ContinuumBath):
        if q.method == "narrow":
            narrow = True
        elif q.method == "auto":
            narrow = (p.spectrum.cutoff * h_max > q.narrow_threshold
                      and narrow_error_estimate(p, t_max) <= q.tol)
        if not narrow:
            # resolve the 1/wc-wide dip of the stationary factor
            h_max = min(h_max, 1.0 / p.spectrum.cutoff)
    diffs = np.diff(pts)
    if len(diffs) and np.allclose(diffs, diffs[0], rtol=1e-12, atol=0):
        h = diffs[0] / math.ceil(diffs[0] / h_max * (1 - 1e-12))
    else:
        h = t_max / math.ceil(t_max / h_max * (1 - 1e-12))
    return QuadraturePlan(step=float(h), panels=int(round(t_max / h)), narrow=narrow)


def _grid_factor(p, split):
    """Stationary factor as sampled on the quadrature grid.

    For the continuum ``B(d) = B_inf exp(c / (1 + i wc d))`` with
    ``c = lam^2 / (2 wc^2)``. On the narrow path the grid carries ``B_inf`` plus
    the slow odd tail ``-i c B_inf / (wc d)``; the remaining ~1/wc spike enters
    through its integral only. Paired with ``Im <v_i|v_j> ~ d`` the tail term
    is smooth across the diagonal, which the full ``Im B`` is not.
    """
    if split is None:
        return lambda d: bathmod.stationary_factor(d, p.lam, p.spectrum)
    wc = p.spectrum.cutoff
    slope = split.b_inf * p.lam**2 / (2.0 * wc**3)

    def factor(d):
        d = np.asarray(d, dtype=float)
        safe = np.where(d == 0.0, 1.0, d)
        return split.b_inf - 1j * np.where(d == 0.0, 0.0, slope / safe)

    return factor


def _square_sums(times, p, q, plan: QuadraturePlan, evo) -> np.ndarray:
    """``int int_{[0,t]^2} <v|v> B`` (without eps^2/4) at each requested time."""
    x, wgl = np.polynomial.legendre.leggauss(q.nodes)
    h, m = plan.step, plan.panels
    w = 0.5 * h * wgl
    offs = 0.5 * (x + 1.0) * h
    t_nodes = np.arange(m)[:, None] * h + offs[None, :]
    v = node_vectors(t_nodes, p, evo)  # (m, nodes, d)

    split = bathmod.narrow_split(p.lam, p.spectrum) if plan.narrow else None
    factor = _grid_factor(p, split)
    delta = np.arange(m)[:, None, None] * h + (offs[:, None] - offs[None, :])[None]
    rows = kernels.ALGORITHMS[q.kernel](v, w, factor(delta), q.threads, q.backend)
    cum = np.concatenate([[0.0], np.cumsum(rows)])
    if split is not None:
        diag = np.concatenate([[0.0], np.cumsum((w[None, :] * np.sum(np.abs(v) ** 2, axis=-1)).sum(1))])
        cum = cum + split.integral * diag

    out = np.empty(len(times))
    flat_t = t_nodes.ravel()
    flat_v = v.reshape(-1, v.shape[-1])
    flat_w = np.tile(w, m)
    for i, tg in enumerate(times):
        k = int(round(tg / h))
        if abs(tg - k * h) <= 1e-9 * h and k <= m:
            out[i] = cum[k]
            continue
        # partial panel [k h, tg]
        k = min(int(math.floor(tg / h)), m)
        width = tg - k * h
        tt = k * h + 0.5 * (x + 1.0) * width
        tw = 0.5 * width * wgl
        tv = node_vectors(tt, p, evo)
        n_old = k * q.nodes
        gram_old = (tw[:, None] * tv).conj() @ (flat_w[:n_old, None] * flat_v[:n_old]).T
        gram_new = (tw[:, None] * tv).conj() @ (tw[:, None] * tv).T
        out[i] = (cum[k] + 2.0 * np.sum(factor(tt[:, None] - flat_t[None, :n_old]) * gram_old).real
                  + np.sum(factor(tt[:, None] - tt[None, :]) * gram_new).real)
        if split is not None:
            out[i] += split.integral * np.sum(tw * np.sum(np.abs(tv) ** 2, axis=-1))
    return out


@dataclass
class FidelityResult:
    times: np.ndarray
    values: np.ndarray
    refined: np.ndarray | None
    plan: QuadraturePlan
    converged: np.ndarray
    exceeds_one: np.ndarray

    @property
    def flags(self) -> list[str]:
        out = []
        for conv, gt1 in zip(self.converged, self.exceeds_one):
            tags = ([] if conv else ["quad"]) + (["gt1"] if gt1 else [])
            out.append("|".join(tags) if tags else "ok")
        return out


def fidelity_values(times, p: PerturbationParams, q: QuadratureSettings | None = None) -> FidelityResult:
    """Second-order fidelity at every requested (physical) time, in one cumulative pass."""
    q = q or QuadratureSettings()
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    if p.epsilon == 0 or times.max(initial=0.0) == 0:
        ones = np.ones(len(times))
        plan = QuadraturePlan(step=0.0, panels=0, narrow=False)
        flags = np.zeros(len(times), bool)
        return FidelityResult(times, ones, ones.copy() if q.check else None, plan, ~flags, flags)
    evo = SystemEvolution(p)
    if isinstance(p.spectrum, ContinuumBath):
        p = replace(p, spectrum=bathmod.resolve_continuum(p.spectrum, p.lam))
    plan = plan_quadrature(times, p, q, evo)
    scale = p.epsilon**2 / 4.0
    values = 1.0 - scale * _square_sums(times, p, q, plan, evo)
    refined = None
    converged = np.ones(len(times), bool)
    if q.check:
        fine = QuadraturePlan(plan.step / 2, plan.panels * 2, plan.narrow)
        refined = 1.0 - scale * _square_sums(times, p, q, fine, evo)
        converged = np.abs(refined - values) <= q.tol
    return FidelityResult(times, values, refined, plan, converged, values > 1.0 + GT1_TOL)


def fidelity(t: float, p: PerturbationParams, q: QuadratureSettings | None = None) -> float:
    """Second-order fidelity ``F(t)``; raises ``QuadratureError`` on non-convergence."""
    res = fidelity_values([t], p, q)
    if not res.converged[0]:
        raise QuadratureError(
            f"quadrature did not converge at t={t}: {res.values[0]!r} vs {res.refined[0]!r}",
            coarse=res.values[0], fine=res.refined[0],
        )
    return float(res.values[0])


def reference_fidelity(t: float, p: PerturbationParams, panels: int = 8, nodes: int = 8) -> float:
    """Triangle rule ``1 - 2 Re int_0^t int_0^t1 K`` with ``K`` from ``kernel`` (slow, for checks)."""
    if t == 0 or p.epsilon == 0:
        return 1.0
    x, wgl = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, t, panels + 1)
    t1 = np.concatenate([0.5 * (b - a) * (x + 1) + a for a, b in zip(edges[:-1], edges[1:])])
    w1 = np.concatenate([0.5 * (b - a) * wgl for a, b in zip(edges[:-1], edges[1:])])
    total = 0.0 + 0.0j
    for ti, wi in zip(t1, w1):
        inner_edges = np.linspace(0.0, ti, panels + 1)
        t2 = np.concatenate([0.5 * (b - a) * (x + 1) + a for a, b in zip(inner_edges[:-1], inner_edges[1:])])
        w2 = np.concatenate([0.5 * (b - a) * wgl for a, b in zip(inner_edges[:-1], inner_edges[1:])])
        total += wi * np.sum(w2 * kernel(np.array([ti]), t2, p)[0])
    return float(1.0 - 2.0 * total.real)


@dataclass
class FidelityCurve:
    eps_t: np.ndarray
    fidelity: np.ndarray
    flags: list
    params: PerturbationParams
    settings: QuadratureSettings
    plan: QuadraturePlan
    wall_time: float

    @property
    def infidelity(self) -> np.ndarray:
        return 1.0 - self.fidelity

    def mean_infidelity(self) -> float:
        """Time average of ``1 - F`` over the grid (trapezoid rule)."""
        span = self.eps_t[-1] - self.eps_t[0]
        if span == 0:
            return float(self.infidelity[0])
        return float(np.trapezoid(self.infidelity, self.eps_t) / span)


def fidelity_curve(grid, p: PerturbationParams, q: QuadratureSettings | None = None) -> FidelityCurve:
    """Fidelity on a grid of dimensionless times ``eps * t``."""
    q = q or QuadratureSettings()
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ValueError("grid must be sorted and non-negative")
    start = time.perf_counter()
    times = grid / p.epsilon if p.epsilon > 0 else np.zeros_like(grid)
    res = fidelity_values(times, p, q)
    return FidelityCurve(grid, res.values, res.flags, p, q, res.plan, time.perf_counter() - start)
