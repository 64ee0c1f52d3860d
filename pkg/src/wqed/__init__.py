"""Ground-state laboratory for 1D cavity arrays coupled to two-level impurities.

Exact diagonalization in fixed-excitation sectors, closed-form dressed-state
analytics, effective impurity and polariton models, unit-cell mean field, and
a sweep CLI that writes reproducible phase-diagram data.
"""

__version__ = "0.1.0"

from .basis import (
    Configuration,
    ModelSpec,
    NonlinearitySpec,
    SectorBasis,
    atom_excited,
    enumerate_sector,
    occupation,
    state_index,
)
from .hamiltonian import SparseOperator, apply_number_operators, build_hamiltonian, stagger_transform
from .eigensolve import EigenResult, dense_spectrum, ground_state, low_spectrum

__all__ = [
    "Configuration",
    "ModelSpec",
    "NonlinearitySpec",
    "SectorBasis",
    "SparseOperator",
    "EigenResult",
    "atom_excited",
    "apply_number_operators",
    "build_hamiltonian",
    "dense_spectrum",
    "enumerate_sector",
    "ground_state",
    "low_spectrum",
    "occupation",
    "state_index",
    "stagger_transform",
    "__version__",
]
