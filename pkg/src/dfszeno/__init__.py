"""Decoherence-free two-qubit encoding under strong collective dephasing.

Second-order fidelity of the encoded register with a truncated-Fock exact
reference for cross-checks.
"""
__version__ = "0.1.0"

from . import bath, dfs, gates, kernels, oracle, perturbation, spin  # noqa: E402
from .bath import ContinuumBath, DiscreteModes  # noqa: E402
from .gates import CommutingCoupling, GateKind, GeneralCoupling, gate_hamiltonian  # noqa: E402
from .oracle import FockTruncation, exact_fidelity  # noqa: E402
from .perturbation import (  # noqa: E402
    PerturbationParams,
    QuadratureSettings,
    fidelity,
    fidelity_curve,
)

__all__ = [
    "ContinuumBath",
    "CommutingCoupling",
    "DiscreteModes",
    "FockTruncation",
    "GateKind",
    "GeneralCoupling",
    "PerturbationParams",
    "QuadratureSettings",
    "bath",
    "dfs",
    "exact_fidelity",
    "fidelity",
    "fidelity_curve",
    "gate_hamiltonian",
    "gates",
    "kernels",
    "oracle",
    "perturbation",
    "spin",
]
