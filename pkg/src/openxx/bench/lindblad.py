"""Dense master-equation integration for small chains (L <= 6).

Direct Runge-Kutta integration of
    d rho/dt = -i [H, rho] + kappa sum_j (L_j rho L_j^dag
               - {L_j^dag L_j, rho} / 2)
on the full 2^L x 2^L density matrix, with Hermiticity enforced by
symmetrization after every accepted step and the trace monitored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rk
from ..dynamics import DomainError
from ..observables import ObservableSeries
from .operators import build_jump_rate_operator, build_operators, initial_product_state
from .trajectories import SpinChainConfig

DENSE_L_MAX = 6
TRACE_ABORT = 1e-6


class LindbladError(RuntimeError):
    """Master-equation integration failed a conservation check."""


@dataclass
class LindbladResult:
    """Observable series plus the density matrices at the checkpoints."""

    series: ObservableSeries
    rhos: list[np.ndarray]
    max_trace_drift: float
    purity: np.ndarray


def dense_lindblad(cfg: SpinChainConfig) -> LindbladResult:
    """Integrate the master equation through the checkpoint kt values."""
    if cfg.L > DENSE_L_MAX:
        raise DomainError(
            f"dense master-equation integration is limited to L <= {DENSE_L_MAX}, "
            f"got L = {cfg.L}"
        )
    p = cfg.params
    H, jumps = build_operators(cfg.L, p)
    H = H.toarray()
    jumps = [lj.toarray() for lj in jumps]
    jdags = [lj.conj().T for lj in jumps]
    rate_op = build_jump_rate_operator(cfg.L, p).toarray()

    psi0 = initial_product_state(p.theta, cfg.L)
    rho0 = np.outer(psi0, psi0.conj())
    dim = rho0.shape[0]

    def f(t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (H @ rho - rho @ H)
        acc = sum(lj @ rho @ ljd for lj, ljd in zip(jumps, jdags))
        drho += p.kappa * (acc - 0.5 * (rate_op @ rho + rho @ rate_op))
        return drho.reshape(-1)

    max_drift = 0.0

    def symmetrize(t, y):
        nonlocal max_drift
        rho = y.reshape(dim, dim)
        rho += rho.conj().T
        rho *= 0.5
        drift = abs(float(np.trace(rho).real) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > TRACE_ABORT:
            raise LindbladError(f"trace drift {drift:.3e} at t = {t:.6g}")

    t_checkpoints = [kt / p.kappa for kt in cfg.checkpoints]
    sol = rk.integrate_adaptive(
        f,
        0.0,
        rho0.reshape(-1).astype(complex),
        t_checkpoints,
        rel_tol=1e-9,
        abs_tol=1e-13,
        dt_init=1e-3,
        callback=symmetrize,
    )

    counts = np.bitwise_count(np.arange(dim, dtype=np.uint64)).astype(float)
    curr_op = _current_operator(cfg.L, p.J).toarray()
    rhos, ns, currs, energies, purity = [], [], [], [], []
    for y in sol.states:
        rho = y.reshape(dim, dim)
        rhos.append(rho.copy())
        ns.append(float(np.dot(counts, np.diag(rho).real)) / cfg.L)
        currs.append(float(np.trace(curr_op @ rho).real) / (cfg.L * p.J))
        energies.append(float(np.trace(H @ rho).real) / (cfg.L * p.J))
        purity.append(float(np.trace(rho @ rho).real))

    series = ObservableSeries(
        times=np.asarray(cfg.checkpoints),
        n=np.array(ns),
        current=np.array(currs),
        energy=np.array(energies),
        provenance=f"dense-lindblad L={cfg.L}",
    )
    return LindbladResult(
        series=series, rhos=rhos, max_trace_drift=max_drift, purity=np.array(purity)
    )


def _current_operator(L: int, J: float):
    """Total Hamiltonian current (i J / 2) sum_j (S+_{j+1} S-_j - S+_j S-_{j+1})."""
    from scipy import sparse
    from .operators import _hop

    dim = 1 << L
    op = sparse.csr_matrix((dim, dim), dtype=complex)
    for j in range(L):
        jp = (j + 1) % L
        op = op + _hop(L, jp, j) - _hop(L, j, jp)
    return (0.5j * J * op).tocsr()
