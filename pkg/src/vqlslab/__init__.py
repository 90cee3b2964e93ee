"""Variational quantum linear solver laboratory: Pauli LCU decomposition,
Hadamard-test cost evaluation, COBYLA-style optimisation and gradient analysis."""
from __future__ import annotations

__version__ = "0.1.0"

from .cost import CostKind, EvalPath
from .problems import ProblemInstance, make_banded_synthetic, make_ising, make_random_pauli

__all__ = [
    "CostKind",
    "EvalPath",
    "ProblemInstance",
    "make_banded_synthetic",
    "make_ising",
    "make_random_pauli",
]
