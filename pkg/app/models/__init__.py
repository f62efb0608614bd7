from .lattice import LatticeField
from .carleman import CarlemanState
from .pauli import PauliExpansion, PauliString
from .circuit import BlockEncoding, QuantumRegisterLayout, StateVector
from .results import ExperimentResult

__all__ = [
    "LatticeField",
    "CarlemanState",
    "PauliExpansion",
    "PauliString",
    "BlockEncoding",
    "QuantumRegisterLayout",
    "StateVector",
    "ExperimentResult",
]
