"""Spin-spin control Hamiltonians and the universal gate set inside the DFS.

Two builders are provided:

``build_general``
    local fields ``B^(n)`` and pair couplings ``G^(mn)`` with arbitrary 3x3
    real matrices, ``H = -1/2 sum_n B^(n).sigma^(n) + 1/4 sum_{m<n} sigma^(m).G^(mn).sigma^(n)``.
``build_commuting``
    the J_z-preserving family parameterized by ``Bz``, ``Gzz``, ``Gxx`` and ``Gxy``
    (22 real numbers).

The five named gates (CNOT, T1, T2, H1, H2) are members of the second family.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import dfs
from .spin import DIM, Axis, collective_j, commutator_norm, expm_unitary, pauli_op

PAIRS = tuple(itertools.combinations(range(1, 5), 2))
AXES = (Axis.X, Axis.Y, Axis.Z)
GATE_TOL = 1e-12

SQ2 = np.sqrt(2.0)


class GateKind(str, Enum):
    CNOT = "cnot"
    T1 = "t1"
    T2 = "t2"
    H1 = "h1"
    H2 = "h2"
    IDLE = "idle"

    @classmethod
    def parse(cls, value) -> "GateKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown gate {value!r}; expected one of {names}") from None


NAMED_GATES = (GateKind.CNOT, GateKind.T1, GateKind.T2, GateKind.H1, GateKind.H2)


@dataclass(frozen=True)
class GeneralCoupling:
    """Local fields ``B[n-1] = (Bx, By, Bz)`` and pair matrices ``G[(m, n)]`` for m < n."""

    B: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    G: dict = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.B, dtype=float).reshape(4, 3)
        g = {}
        for pair, mat in self.G.items():
            m, n = pair
            if not (1 <= m < n <= 4):
                raise ValueError(f"pair {pair} must satisfy 1 <= m < n <= 4")
            g[(m, n)] = np.asarray(mat, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(b)) or not all(np.all(np.isfinite(v)) for v in g.values()):
            raise ValueError("coupling entries must be finite")
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "G", g)


@dataclass(frozen=True)
class CommutingCoupling:
    """Parameters of the J_z-commuting family; pair arrays follow ``PAIRS`` order."""

    Bz: np.ndarray = field(default_factory=lambda: np.zeros(4))
    Gzz: np.ndarray = field(default_factory=lambda: np.zeros(6))
    Gxx: np.ndarray = field(default_factory=lambda: np.zeros(6))
    Gxy: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        for name, size in (("Bz", 4), ("Gzz", 6), ("Gxx", 6), ("Gxy", 6)):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(size)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, arr)

    @classmethod
    def from_vector(cls, x) -> "CommutingCoupling":
        x = np.asarray(x, dtype=float).reshape(22)
        return cls(x[:4], x[4:10], x[10:16], x[16:22])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.Bz, self.Gzz, self.Gxx, self.Gxy])

    def to_general(self) -> GeneralCoupling:
        b = np.zeros((4, 3))
        b[:, 2] = self.Bz
        g = {}
        for k, pair in enumerate(PAIRS):
            mat = np.zeros((3, 3))
            mat[0, 0] = mat[1, 1] = self.Gxx[k]
            mat[0, 1] = self.Gxy[k]
            mat[1, 0] = -self.Gxy[k]
            mat[2, 2] = self.Gzz[k]
            g[pair] = mat
        return GeneralCoupling(b, g)


def build_general(c: GeneralCoupling, return_asymmetry: bool = False):
    h = np.zeros((DIM, DIM), dtype=complex)
    for n in range(1, 5):
        for i, ax in enumerate(AXES):
            if c.B[n - 1, i]:
                h -= 0.5 * c.B[n - 1, i] * pauli_op(n, ax)
    for (m, n), mat in c.G.items():
        for i, j in itertools.product(range(3), range(3)):
            if mat[i, j]:
                h += 0.25 * mat[i, j] * (pauli_op(m, AXES[i]) @ pauli_op(n, AXES[j]))
    asym = float(np.linalg.norm(h - h.conj().T))
    h = 0.5 * (h + h.conj().T)
    return (h, asym) if return_asymmetry else h


def _flipflop(m: int, n: int) -> np.ndarray:
    return pauli_op(m, "x") @ pauli_op(n, "x") + pauli_op(m, "y") @ pauli_op(n, "y")


def _twist(m: int, n: int) -> np.ndarray:
    return pauli_op(m, "x") @ pauli_op(n, "y") - pauli_op(m, "y") @ pauli_op(n, "x")


def build_commuting(c: CommutingCoupling) -> np.ndarray:
    h = np.zeros((DIM, DIM), dtype=complex)
    for n in range(1, 5):
        h -= 0.5 * c.Bz[n - 1] * pauli_op(n, "z")
    for k, (m, n) in enumerate(PAIRS):
        h += 0.25 * (
            c.Gzz[k] * (pauli_op(m, "z") @ pauli_op(n, "z"))
            + c.Gxx[k] * _flipflop(m, n)
            + c.Gxy[k] * _twist(m, n)
        )
    return h


def _check_tau(tau: float) -> float:
    if not tau > 0:
        raise ValueError(f"gate time must be positive, got {tau!r}")
    return float(tau)


def gate_hamiltonian(kind, tau: float = 1.0) -> np.ndarray:
    """Control Hamiltonian whose evolution for time ``tau`` realizes ``kind``."""
    kind = GateKind.parse(kind)
    tau = _check_tau(tau)
    sz = lambda n: pauli_op(n, "z")  # noqa: E731
    if kind is GateKind.IDLE:
        return np.zeros((DIM, DIM), dtype=complex)
    if kind is GateKind.CNOT:
        return np.pi / (4 * tau) * (sz(3) + sz(4) - _flipflop(1, 2))
    if kind is GateKind.T1:
        return -np.pi / (8 * tau) * (sz(3) + sz(4))
    if kind is GateKind.T2:
        return -np.pi / (8 * tau) * (sz(2) + sz(4))
    # Hadamards: H2 is H1 with qubit labels 2 and 3 exchanged.
    a, b, c, d = (1, 2, 3, 4) if kind is GateKind.H1 else (1, 3, 2, 4)
    return np.pi / (8 * tau) * (
        (2 - SQ2) * (sz(a) + sz(b))
        + (2 + SQ2) * (sz(c) + sz(d))
        - SQ2 * (_flipflop(a, c) + _flipflop(b, d))
    )


def gate_coupling(kind, tau: float = 1.0) -> CommutingCoupling:
    """The same gates expressed as ``CommutingCoupling`` parameters."""
    kind = GateKind.parse(kind)
    tau = _check_tau(tau)
    bz = np.zeros(4)
    gxx = np.zeros(6)
    pair = {p: k for k, p in enumerate(PAIRS)}
    if kind is GateKind.CNOT:
        bz[[2, 3]] = -np.pi / (2 * tau)
        gxx[pair[(1, 2)]] = -np.pi / tau
    elif kind is GateKind.T1:
        bz[[2, 3]] = np.pi / (4 * tau)
    elif kind is GateKind.T2:
        bz[[1, 3]] = np.pi / (4 * tau)
    elif kind in (GateKind.H1, GateKind.H2):
        low, high, pairs = (
            ([0, 1], [2, 3], [(1, 3), (2, 4)])
            if kind is GateKind.H1
            else ([0, 2], [1, 3], [(1, 2), (3, 4)])
        )
        bz[low] = -np.pi * (2 - SQ2) / (4 * tau)
        bz[high] = -np.pi * (2 + SQ2) / (4 * tau)
        for p in pairs:
            gxx[pair[p]] = -np.pi / (SQ2 * tau)
    return CommutingCoupling(Bz=bz, Gxx=gxx)


def target_unitary(kind) -> np.ndarray:
    """Literal 4x4 target matrices in the ordered DFS basis."""
    kind = GateKind.parse(kind)
    w = np.exp(1j * np.pi / 4)
    if kind is GateKind.IDLE:
        return np.eye(4, dtype=complex)
    if kind is GateKind.CNOT:
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    if kind is GateKind.T1:
        return np.diag([1, 1, w, w]).astype(complex)
    if kind is GateKind.T2:
        return np.diag([1, w, 1, w]).astype(complex)
    if kind is GateKind.H1:
        return np.array([[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]], dtype=complex) / SQ2
    return np.array([[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]], dtype=complex) / SQ2


class LeakageError(AssertionError):
    """A gate unitary moved amplitude out of the decoherence-free subspace."""


@dataclass(frozen=True)
class GateReport:
    kind: GateKind
    tau: float
    max_error: float
    leakage: float
    commutator: float

    @property
    def ok(self) -> bool:
        return max(self.max_error, self.leakage, self.commutator) < GATE_TOL


def gate_report(kind, tau: float = 1.0) -> GateReport:
    kind = GateKind.parse(kind)
    h = gate_hamiltonian(kind, tau)
    u = expm_unitary(h, tau)
    err = float(np.max(np.abs(dfs.restrict(u) - target_unitary(kind))))
    return GateReport(kind, tau, err, dfs.leakage_norm(u), commutator_norm(h, collective_j("z")))


def verify_gate(kind, tau: float = 1.0) -> float:
    """Max elementwise deviation of the DFS block of ``exp(-i H tau)`` from the target.

    Raises ``LeakageError`` if the unitary couples the DFS to its complement.
    """
    rep = gate_report(kind, tau)
    if rep.leakage > GATE_TOL:
        raise LeakageError(f"{rep.kind.value} leaks {rep.leakage:.3e} out of the DFS")
    return rep.max_error


# -- universality -----------------------------------------------------------

PARAM_GROUPS = {"bz": slice(0, 4), "gzz": slice(4, 10), "gxx": slice(10, 16), "gxy": slice(16, 22)}


def hermitian_to_real(h4: np.ndarray) -> np.ndarray:
    """Real 16-vector of a 4x4 Hermitian matrix: diagonal, then Re/Im of the upper triangle."""
    iu = np.triu_indices(4, 1)
    return np.concatenate([h4.diagonal().real, h4[iu].real, h4[iu].imag])


def span_matrix(exclude=()) -> np.ndarray:
    """16 x k real matrix of the linear map from coupling parameters to the restricted block."""
    keep = np.ones(22, dtype=bool)
    for group in exclude:
        keep[PARAM_GROUPS[group.lower()]] = False
    cols = []
    for i in np.flatnonzero(keep):
        x = np.zeros(22)
        x[i] = 1.0
        cols.append(hermitian_to_real(dfs.restrict(build_commuting(CommutingCoupling.from_vector(x)))))
    return np.array(cols).T


def hermitian_span_rank(exclude=(), tol: float = 1e-10) -> int:
    """Numerical rank of the parameter-to-DFS-block map (16 means every Hermitian 4x4 is reachable).

    ``exclude`` drops parameter groups (``"bz"``, ``"gzz"``, ``"gxx"``, ``"gxy"``).
    """
    s = np.linalg.svd(span_matrix(exclude), compute_uv=False)
    return int(np.sum(s > tol))


def lie_closure_rank(exclude=(), tol: float = 1e-10, max_depth: int = 6) -> int:
    """Dimension of the real Lie algebra generated by ``i * restrict(H)`` over the allowed family.

    Linear span of the restricted Hamiltonians can be smaller than the Lie
    closure; universality of the gate set only needs the latter to be u(4).
    """
    a = span_matrix(exclude)
    iu = np.triu_indices(4, 1)

    def to_matrix(vec):
        m = np.diag(vec[:4]).astype(complex)
        m[iu] = vec[4:10] + 1j * vec[10:16]
        m[(iu[1], iu[0])] = vec[4:10] - 1j * vec[10:16]
        return m

    basis = []

    def add(vec):
        trial = np.array(basis + [vec]).T
        if np.linalg.matrix_rank(trial, tol) > len(basis):
            basis.append(vec)
            return True
        return False

    for col in a.T:
        add(col)
    frontier = list(basis)
    for _ in range(max_depth):
        new = []
        for x in frontier:
            for y in list(basis):
                # i[H1, H2] is Hermitian when H1, H2 are.
                c = 1j * (to_matrix(x) @ to_matrix(y) - to_matrix(y) @ to_matrix(x))
                vec = hermitian_to_real(c)
                if np.linalg.norm(vec) > tol and add(vec / np.linalg.norm(vec)):
                    new.append(basis[-1])
        if not new or len(basis) == 16:
            break
        frontier = new
    return len(basis)


# -- schedules ----------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    duration: float
    coupling: CommutingCoupling

    def __post_init__(self):
        if not (self.duration > 0 and np.isfinite(self.duration)):
            raise ValueError(f"segment duration must be positive and finite, got {self.duration!r}")


def gate_schedule(kinds, tau: float = 1.0) -> list[Segment]:
    """Piecewise-constant schedule that applies ``kinds`` in order, each for time ``tau``."""
    return [Segment(tau, gate_coupling(k, tau)) for k in kinds]


def schedule_unitary(schedule) -> np.ndarray:
    """Product of segment propagators; later segments act on the left."""
    u = np.eye(DIM, dtype=complex)
    for seg in schedule:
        u = expm_unitary(build_commuting(seg.coupling), seg.duration) @ u
    return u
