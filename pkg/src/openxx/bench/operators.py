"""Sparse operators for the periodic spin-1/2 chain in the 2^L basis.

Basis states are integers s in [0, 2^L); bit j of s is the occupation
n_j (up spin) of site j.  Periodic boundaries identify site L with site 0.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse

from ..dynamics import DomainError, ModelParams

L_MIN, L_MAX = 4, 14


def _check_L(L: int):
    if not (L_MIN <= L <= L_MAX):
        raise DomainError(f"site count must be in [{L_MIN}, {L_MAX}], got {L}")


def _lowering(L: int, j: int) -> sparse.csr_matrix:
    """S^-_j: clears bit j where it is set."""
    dim = 1 << L
    s = np.arange(dim)
    src = s[(s >> j) & 1 == 1]
    dst = src ^ (1 << j)
    data = np.ones(src.size)
    return sparse.csr_matrix((data, (dst, src)), shape=(dim, dim), dtype=complex)


def _hop(L: int, j: int, l: int) -> sparse.csr_matrix:
    """S^+_j S^-_l for j != l: moves an up spin from l to j."""
    dim = 1 << L
    s = np.arange(dim)
    mask = ((s >> l) & 1 == 1) & ((s >> j) & 1 == 0)
    src = s[mask]
    dst = (src ^ (1 << l)) | (1 << j)
    data = np.ones(src.size)
    return sparse.csr_matrix((data, (dst, src)), shape=(dim, dim), dtype=complex)


def _number(L: int) -> sparse.csr_matrix:
    dim = 1 << L
    counts = np.array([bin(s).count("1") for s in range(dim)], dtype=float)
    return sparse.diags(counts, format="csr", dtype=complex)


def build_operators(L: int, params: ModelParams):
    """Hamiltonian and the L two-site jump operators, sparse, PBC.

    H = -J/2 sum_j (S+_{j+1} S-_j + S+_j S-_{j+1}), L_j = S-_j
    + e^{i phi} S-_{j+1}, with site indices mod L.  H is Hermitian and
    every jump operator lowers the total up-spin number by one.
    """
    _check_L(L)
    dim = 1 << L
    H = sparse.csr_matrix((dim, dim), dtype=complex)
    for j in range(L):
        jp = (j + 1) % L
        H = H + _hop(L, jp, j) + _hop(L, j, jp)
    H = (-params.J / 2.0) * H
    phase = np.exp(1j * params.phi)
    jumps = []
    for j in range(L):
        jp = (j + 1) % L
        jumps.append((_lowering(L, j) + phase * _lowering(L, jp)).tocsr())
    return H.tocsr(), jumps


def build_jump_rate_operator(L: int, params: ModelParams) -> sparse.csr_matrix:
    """sum_j L_j^dag L_j assembled analytically:
    2 N + sum_j (e^{i phi} S+_j S-_{j+1} + e^{-i phi} S+_{j+1} S-_j)."""
    _check_L(L)
    phase = np.exp(1j * params.phi)
    total = 2.0 * _number(L)
    for j in range(L):
        jp = (j + 1) % L
        total = total + phase * _hop(L, j, jp) + np.conj(phase) * _hop(L, jp, j)
    return total.tocsr()


def initial_product_state(theta: float, L: int) -> np.ndarray:
    """Translationally invariant product state
    prod_j (cos(theta)|up> + sin(theta)|down>) as a 2^L amplitude vector."""
    _check_L(L)
    if not (0.0 <= theta < math.pi / 2):
        raise DomainError(f"theta must lie in [0, pi/2), got {theta}")
    dim = 1 << L
    ups = np.array([bin(s).count("1") for s in range(dim)])
    amps = np.cos(theta) ** ups * np.sin(theta) ** (L - ups)
    return amps.astype(complex)


def sector_indices(L: int, n_up: int) -> np.ndarray:
    """Basis indices of the fixed-magnetization sector with n_up up spins."""
    dim = 1 << L
    counts = np.array([bin(s).count("1") for s in range(dim)])
    return np.where(counts == n_up)[0]


def site_density(L: int, psi: np.ndarray) -> np.ndarray:
    """Per-site up-spin probabilities <n_j> of a normalized state."""
    prob = np.abs(psi) ** 2
    s = np.arange(psi.size)
    return np.array([prob[(s >> j) & 1 == 1].sum() for j in range(L)])
