"""The M_z = +1 decoherence-free subspace and its two abstract qubits.

Ordered basis (abstract label -> physical product state -> index)::

    |0,0>  |up,up,up,down>   1
    |0,1>  |up,up,down,up>   2
    |1,0>  |up,down,up,up>   4
    |1,1>  |down,up,up,up>   8
"""
from __future__ import annotations

import numpy as np

from .spin import DIM

DFS_INDICES = (1, 2, 4, 8)
# M_z = -1 twin, mirrored bitwise; representable but not used by the gate set.
TWIN_INDICES = tuple(DIM - 1 - i for i in DFS_INDICES)

NORM_TOL = 1e-12
LABELS = ("00", "01", "10", "11")


def dfs_basis_indices() -> list[int]:
    return list(DFS_INDICES)


def basis_state(label: str) -> np.ndarray:
    """Abstract basis vector, e.g. ``basis_state("10")``."""
    v = np.zeros(4, dtype=complex)
    v[LABELS.index(label)] = 1.0
    return v


def default_initial_state() -> np.ndarray:
    """``(|1,0> - |0,0>) / sqrt(2)``."""
    return (basis_state("10") - basis_state("00")) / np.sqrt(2.0)


def projector(indices=DFS_INDICES) -> np.ndarray:
    p = np.zeros((DIM, DIM), dtype=complex)
    p[list(indices), list(indices)] = 1.0
    return p


def encode(v, normalize: bool = False) -> np.ndarray:
    """Embed a 4-amplitude abstract state into the 16-dimensional space."""
    v = np.asarray(v, dtype=complex).reshape(4)
    norm = np.linalg.norm(v)
    if normalize:
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        v = v / norm
    elif abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"DFS state is not normalized (norm = {norm!r})")
    s = np.zeros(DIM, dtype=complex)
    s[list(DFS_INDICES)] = v
    return s


def decode(s) -> tuple[np.ndarray, float]:
    """Split a physical state into its (unnormalized) DFS amplitudes and leaked weight."""
    s = np.asarray(s, dtype=complex).reshape(DIM)
    v = s[list(DFS_INDICES)].copy()
    outside = np.delete(s, list(DFS_INDICES))
    return v, float(np.vdot(outside, outside).real)


def restrict(a) -> np.ndarray:
    """Matrix elements ``<basis_i|A|basis_j>`` in the ordered DFS basis."""
    a = np.asarray(a)
    idx = list(DFS_INDICES)
    return a[np.ix_(idx, idx)].astype(complex)


def leakage_norm(u) -> float:
    """Frobenius norm of ``(1 - P) U P``: amplitude sent out of the DFS."""
    p = projector()
    return float(np.linalg.norm((np.eye(DIM) - p) @ np.asarray(u) @ p))


def parse_state(text: str) -> np.ndarray:
    """Parse ``"a0,a1,a2,a3"`` where each entry is a Python complex literal (``re+imj``/``re+imi``)."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated amplitudes, got {len(parts)}")
    try:
        amps = [complex(p.replace(" ", "").replace("i", "j")) for p in parts]
    except ValueError as exc:
        raise ValueError(f"bad amplitude in {text!r}: {exc}") from None
    return np.array(amps, dtype=complex)
