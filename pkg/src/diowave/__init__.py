"""Quasi-resonant dynamics of cubic NLS on R x T^d with a Diophantine dispersion matrix."""

from .lattice import DispersionMatrix, Mode, Quadruple, ball_modes, scan_admissibility
from .clusters import ClusterPartition, build_partition
from .resonance import ResonantSet, QuasiResonantIndex, enumerate_resonant_set, build_quasi_resonant_index, divisor_ledger

__version__ = "0.1.0"

__all__ = [
    "DispersionMatrix",
    "Mode",
    "Quadruple",
    "ball_modes",
    "scan_admissibility",
    "ClusterPartition",
    "build_partition",
    "ResonantSet",
    "QuasiResonantIndex",
    "enumerate_resonant_set",
    "build_quasi_resonant_index",
    "divisor_ledger",
]
