"""Brute-force ground truth in a truncated Fock space.

The joint space is ordered system-major: index ``s * nb + m`` for spin basis
state ``s`` and bath Fock configuration ``m``. Single-mode Fock levels run
0..n_max; multi-mode configurations are Kronecker products in mode order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from . import dfs
from .bath import DiscreteModes, f_amp
from .gates import gate_hamiltonian
from .spin import DIM, HermitianPropagator, collective_j, ladder


class TruncationError(RuntimeError):
    """The Fock cutoff is too small for the requested evolution."""


class ResourceError(MemoryError):
    """The joint Hilbert space exceeds the configured dimension cap."""


def annihilation(n_levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_levels)), 1).astype(complex)


@dataclass(frozen=True)
class FockTruncation:
    modes: tuple = ((1.0, 1.0),)
    n_max: int = 15
    cap: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "modes", DiscreteModes(self.modes).modes)
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.dim > self.cap:
            raise ResourceError(
                f"joint dimension {self.dim} exceeds cap {self.cap}; lower n_max or the mode count"
            )

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def bath_dim(self) -> int:
        return self.levels ** len(self.modes)

    @property
    def dim(self) -> int:
        return DIM * self.bath_dim

    @cached_property
    def lowering(self) -> list[np.ndarray]:
        a = annihilation(self.levels)
        eye = np.eye(self.levels)
        ops = []
        for k in range(len(self.modes)):
            out = np.ones((1, 1), dtype=complex)
            for j in range(len(self.modes)):
                out = np.kron(out, a if j == k else eye)
            ops.append(out)
        return ops

    @cached_property
    def occupations(self) -> np.ndarray:
        """(bath_dim, n_modes) occupation numbers of every Fock configuration."""
        grids = np.indices((self.levels,) * len(self.modes)).reshape(len(self.modes), -1)
        return grids.T

    def bath_hamiltonian(self) -> np.ndarray:
        return sum(w * (a.conj().T @ a) for (_, w), a in zip(self.modes, self.lowering))

    def coupling_field(self) -> np.ndarray:
        return sum(g * (a + a.conj().T) for (g, _), a in zip(self.modes, self.lowering))

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.bath_dim, dtype=complex)
        v[0] = 1.0
        return v


def build_full_hamiltonian(gate, tau: float, eps: float, lam: float, trunc: FockTruncation) -> np.ndarray:
    """``H0 (x) 1 + 1 (x) H_E + lam J_z (x) sum g (a + a^dag) + eps J_x (x) 1``."""
    ib = np.eye(trunc.bath_dim)
    return (
        np.kron(gate_hamiltonian(gate, tau), ib)
        + np.kron(np.eye(DIM), trunc.bath_hamiltonian())
        + lam * np.kron(collective_j("z"), trunc.coupling_field())
        + eps * np.kron(collective_j("x"), ib)
    )


def dephasing_generator(lam: float, trunc: FockTruncation) -> np.ndarray:
    """Generator of the free bath plus J_z coupling (the frame of the interaction picture)."""
    return np.kron(np.eye(DIM), trunc.bath_hamiltonian()) + lam * np.kron(collective_j("z"), trunc.coupling_field())


def exact_fidelity(t, gate, tau: float, eps: float, lam: float, trunc: FockTruncation,
                   phi0=None, norm_tol: float = 1e-8, edge_tol: float = 1e-10) -> np.ndarray:
    """Bath-traced return probability of ``phi0`` in the interaction picture.

    Raises ``TruncationError`` when the norm drifts by more than ``norm_tol`` or
    more than ``edge_tol`` of the population reaches the top Fock level.
    """
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    phi0 = dfs.default_initial_state() if phi0 is None else np.asarray(phi0, dtype=complex)
    phi16 = dfs.encode(phi0, normalize=True)
    psi0 = np.kron(phi16, trunc.vacuum())

    full = HermitianPropagator(build_full_hamiltonian(gate, tau, eps, lam, trunc))
    frame = HermitianPropagator(dephasing_generator(lam, trunc))
    system = HermitianPropagator(gate_hamiltonian(gate, tau))

    psi_s = full.apply(psi0, times)  # (nt, D)
    # interaction picture: Ub^dag U0^dag psi_S; both commute, apply U0^dag on the spin factor first
    out = np.empty(len(times))
    nb = trunc.bath_dim
    edge = np.any(trunc.occupations == trunc.n_max, axis=1)
    for i, (ti, psi) in enumerate(zip(times, psi_s)):
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > norm_tol:
            raise TruncationError(f"norm drift {abs(norm - 1):.2e} at t={ti}; increase n_max")
        block = psi.reshape(DIM, nb)
        top = float(np.sum(np.abs(block[:, edge]) ** 2))
        if top > edge_tol:
            raise TruncationError(f"population {top:.2e} at the Fock cutoff at t={ti}; increase n_max")
        block = system(ti).conj().T @ block
        psi_i = frame.apply(block.ravel(), -ti)[0]
        amp = phi16.conj() @ psi_i.reshape(DIM, nb)
        out[i] = float(np.vdot(amp, amp).real)
    return out[0] if scalar else out


def no_bath_fidelity(t, gate, tau: float, eps: float, phi0=None) -> np.ndarray:
    """``|<phi0| exp(i H0 t) exp(-i (H0 + eps J_x) t) |phi0>|^2`` on the 16-dim space."""
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    phi0 = dfs.default_initial_state() if phi0 is None else np.asarray(phi0, dtype=complex)
    phi16 = dfs.encode(phi0, normalize=True)
    h0 = gate_hamiltonian(gate, tau)
    full = HermitianPropagator(h0 + eps * collective_j("x"))
    back = HermitianPropagator(h0)
    psi = full.apply(phi16, times)
    vals = np.array([abs(np.vdot(back.apply(phi16, ti)[0], p)) ** 2 for ti, p in zip(times, psi)])
    return vals[0] if scalar else vals


# -- operator identity ----------------------------------------------------------


def _t4_sides(t: float, lam: float, trunc: FockTruncation):
    from .bath import DiscreteModes as _DM

    spec = _DM(trunc.modes)
    ib = np.eye(trunc.bath_dim)
    u = HermitianPropagator(dephasing_generator(lam, trunc))(t)
    lhs = u.conj().T @ np.kron(collective_j("x"), ib) @ u

    alpha = float(spec.alpha(t, lam))
    gamma = np.zeros((trunc.bath_dim, trunc.bath_dim), dtype=complex)
    for (g, w), a in zip(trunc.modes, trunc.lowering):
        f = complex(f_amp(w, t, lam, g))
        gamma += f * a.conj().T - np.conj(f) * a
    jz = np.diag(collective_j("z")).real
    ez = np.diag(np.exp(-2j * alpha * jz))
    rhs = 0.5 * np.exp(1j * alpha) * (
        np.kron(ez, expm(gamma)) @ np.kron(ladder(1), ib)
        + np.kron(ez.conj(), expm(-gamma)) @ np.kron(ladder(-1), ib)
    )
    return lhs, rhs


def verify_eq_t4(t: float, lam: float, trunc: FockTruncation, pad: int | None = None,
                 guard_tol: float = 1e-12) -> float:
    """Max deviation between ``Ub^dag J_x Ub`` and its closed-form dressed expansion.

    Both sides are built in a padded Fock space of ``n_max + pad`` levels and
    compared on configurations with every occupation ``<= n_max``, where the
    truncated ladder algebra is exact to the padding tolerance. A second run with
    more padding guards the comparison.
    """
    if pad is None:
        pad = max(20, trunc.n_max)

    work_dim = DIM * (trunc.n_max + pad + 11) ** len(trunc.modes)
    if work_dim > max(trunc.cap, 4096):
        raise ResourceError(f"padded work space of dimension {work_dim} exceeds the cap; lower pad or n_max")

    def block_error(extra):
        work = FockTruncation(trunc.modes, trunc.n_max + extra, cap=max(trunc.cap, 4096))
        lhs, rhs = _t4_sides(t, lam, work)
        keep = np.all(work.occupations <= trunc.n_max, axis=1)
        idx = (np.arange(DIM)[:, None] * work.bath_dim + np.flatnonzero(keep)[None, :]).ravel()
        diff = np.abs(lhs - rhs)[np.ix_(idx, idx)]
        return float(diff.max()), lhs[np.ix_(idx, idx)]

    err, lhs1 = block_error(pad)
    err2, lhs2 = block_error(pad + 10)
    drift = float(np.max(np.abs(lhs1 - lhs2)))
    if drift > guard_tol:
        raise ValueError(f"padding of {pad} levels is inadequate (block drift {drift:.2e}); raise pad")
    return err


# -- bath traces -------------------------------------------------------------------


def fock_vacuum_correlation(a: int, b: int, t1: float, t2: float, lam: float, modes, n_max: int = 20) -> complex:
    """``<0| exp(a gamma(t1)) exp(b gamma(t2)) |0>`` from explicit matrix exponentials."""
    trunc = FockTruncation(modes, n_max, cap=1 << 30)

    def gamma(t):
        out = np.zeros((trunc.bath_dim, trunc.bath_dim), dtype=complex)
        for (g, w), op in zip(trunc.modes, trunc.lowering):
            f = complex(f_amp(w, t, lam, g))
            out += f * op.conj().T - np.conj(f) * op
        return out

    return complex((expm(a * gamma(t1)) @ expm(b * gamma(t2)))[0, 0])
