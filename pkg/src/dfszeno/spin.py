"""Dense operator algebra on the 16-dimensional space of four spin-1/2 qubits.

Conventions (hbar = 1 throughout the package):

* qubit 1 is the most significant bit of the computational-basis index;
* spin up is bit 0 and spin down is bit 1, so ``|up,up,up,down>`` is index 1.

All operators are returned as read-only ``complex128`` arrays of shape (16, 16).
"""
from __future__ import annotations

from enum import Enum
from functools import lru_cache

import numpy as np

N_QUBITS = 4
DIM = 2**N_QUBITS

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12


class Axis(str, Enum):
    X = "x"
    Y = "y"
    Z = "z"


_PAULI = {
    Axis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Axis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Axis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _axis(axis) -> Axis:
    try:
        return Axis(axis.lower() if isinstance(axis, str) else axis)
    except ValueError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of x, y, z") from None


@lru_cache(maxsize=None)
def _pauli(n: int, axis: Axis) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for slot in range(1, N_QUBITS + 1):
        out = np.kron(out, _PAULI[axis] if slot == n else np.eye(2))
    return _frozen(out)


def pauli_op(n: int, axis) -> np.ndarray:
    """Pauli matrix ``sigma_axis`` acting on qubit ``n`` (1..4), identity elsewhere."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= N_QUBITS:
        raise ValueError(f"qubit index must be an integer in 1..{N_QUBITS}, got {n!r}")
    return _pauli(int(n), _axis(axis))


@lru_cache(maxsize=None)
def _collective(axis: Axis) -> np.ndarray:
    return _frozen(0.5 * sum(_pauli(n, axis) for n in range(1, N_QUBITS + 1)))


def collective_j(axis) -> np.ndarray:
    """Collective angular momentum ``J_axis = (1/2) sum_n sigma_axis^(n)``."""
    return _collective(_axis(axis))


@lru_cache(maxsize=None)
def _ladder(sign: int) -> np.ndarray:
    return _frozen(_collective(Axis.X) + sign * 1j * _collective(Axis.Y))


def ladder(sign) -> np.ndarray:
    """``J_+`` for ``sign`` in {+1, '+'} and ``J_-`` for {-1, '-'}."""
    return _ladder(parse_sign(sign))


def parse_sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def jz_eigenvalues() -> np.ndarray:
    """Diagonal of J_z: ``(4 - 2 * popcount(index)) / 2`` for each basis index."""
    down = np.array([bin(i).count("1") for i in range(DIM)])
    return (N_QUBITS - 2 * down) / 2.0


def sector_indices(m: float) -> np.ndarray:
    """Computational-basis indices with J_z eigenvalue ``m``."""
    return np.flatnonzero(np.isclose(jz_eigenvalues(), m))


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of ``AB - BA``."""
    return float(np.linalg.norm(commutator(a, b)))


def expm_unitary(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i H t)`` for Hermitian ``H`` via its eigendecomposition.

    Raises ``ValueError`` if ``H`` is not Hermitian within 1e-12, and
    ``ArithmeticError`` if the result fails the unitarity check.
    """
    h = np.asarray(h, dtype=complex)
    if hermiticity_error(h) > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {hermiticity_error(h):.3e})")
    energies, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * energies * t)) @ vecs.conj().T
    err = np.max(np.abs(u.conj().T @ u - np.eye(len(u))))
    if err > UNITARY_TOL:
        raise ArithmeticError(f"exponential lost unitarity: max |U^dag U - 1| = {err:.3e}")
    return u


class HermitianPropagator:
    """Cached eigendecomposition of a fixed Hermitian ``H`` for fast ``exp(-iHt)``.

    ``apply(psi, t)`` accepts a vector of times and returns one row per time.
    """

    def __init__(self, h: np.ndarray):
        h = np.asarray(h, dtype=complex)
        if hermiticity_error(h) > HERMITIAN_TOL:
            raise ValueError("propagator generator must be Hermitian")
        self.energies, self.vecs = np.linalg.eigh(h)

    def __call__(self, t: float) -> np.ndarray:
        return (self.vecs * np.exp(-1j * self.energies * t)) @ self.vecs.conj().T

    def apply(self, psi: np.ndarray, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        coeff = self.vecs.conj().T @ psi
        phases = np.exp(-1j * np.outer(t, self.energies))
        return (phases * coeff) @ self.vecs.T

    @property
    def spread(self) -> float:
        return float(self.energies[-1] - self.energies[0]) if len(self.energies) else 0.0
