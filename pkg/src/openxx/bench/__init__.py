"""Exact finite-size benchmarks for the dissipative spin chain.

Quantum-trajectory unraveling on periodic chains up to L = 14, a dense
Lindblad integrator for L <= 6, and the parity-sector momentum-occupation
extraction used to compare finite chains with the spectral solver.
"""

from .operators import build_operators, build_jump_rate_operator, initial_product_state
from .trajectories import SpinChainConfig, TrajectoryEnsemble, run_trajectories
from .lindblad import LindbladResult, dense_lindblad
from .occupations import (
    SectorOccupations,
    momentum_correlations,
    momentum_occupations,
)

__all__ = [
    "build_operators",
    "build_jump_rate_operator",
    "initial_product_state",
    "SpinChainConfig",
    "TrajectoryEnsemble",
    "run_trajectories",
    "LindbladResult",
    "dense_lindblad",
    "SectorOccupations",
    "momentum_correlations",
    "momentum_occupations",
]
