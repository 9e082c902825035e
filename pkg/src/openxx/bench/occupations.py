"""Parity-resolved momentum occupations of finite periodic chains.

With periodic spin boundaries the Jordan-Wigner fermions are antiperiodic
in the even-particle-number sector and periodic in the odd sector, so two
momentum sets coexist:
    Q_ap = (2 pi / L) {1/2, 3/2, ..., L - 1/2},
    Q_p  = (2 pi / L) {1, 2, ..., L}.
The sector occupations rho_ap(k) = <P_+ c^dag(k) c(k)> and
rho_p(k) = <P_- c^dag(k) c(k)> (P_+- the number-parity projectors) are
assembled from string-ordered two-point correlators, and the interleaved
combination rho_tilde(2 pi (n - 1/4)/L) = rho_ap(2 pi (n - 1/2)/L)
+ rho_p(2 pi n / L) is the finite-size proxy for the thermodynamic
rapidity distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajectories import TrajectoryEnsemble


@dataclass(frozen=True)
class SectorOccupations:
    """Momentum occupations per parity sector plus the interleaved proxy.

    Standard errors are over trajectories (zero for density-matrix input).
    """

    L: int
    momenta_ap: np.ndarray
    momenta_p: np.ndarray
    momenta_tilde: np.ndarray
    rho_ap: np.ndarray
    rho_p: np.ndarray
    rho_tilde: np.ndarray
    stderr_ap: np.ndarray
    stderr_p: np.ndarray
    stderr_tilde: np.ndarray


@dataclass(frozen=True)
class MomentumCorrelations:
    """Per-trajectory matrices <P c^dag(k) c(q)> on each sector's momenta."""

    L: int
    momenta_ap: np.ndarray
    momenta_p: np.ndarray
    samples_ap: np.ndarray  # (n_samples, L, L) complex
    samples_p: np.ndarray


def momentum_sets(L: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = np.arange(1, L + 1)
    q_ap = 2.0 * np.pi * (n - 0.5) / L
    q_p = 2.0 * np.pi * n / L
    q_tilde = 2.0 * np.pi * (n - 0.25) / L
    return q_ap, q_p, q_tilde


def _jw_tables(L: int):
    """Bit tables for string-ordered c_l application on basis integers."""
    dim = 1 << L
    s = np.arange(dim, dtype=np.uint64)
    prefix = []
    for j in range(L):
        below = s & np.uint64((1 << j) - 1)
        prefix.append(np.bitwise_count(below).astype(np.int64))
    parity = np.bitwise_count(s).astype(np.int64) & 1
    return s.astype(np.int64), prefix, parity


def _apply_annihilation(psi: np.ndarray, j: int, prefix_j: np.ndarray) -> np.ndarray:
    """c_j psi with c_j = (-1)^{N_(<j)} S^-_j."""
    dim = psi.size
    out = np.zeros(dim, dtype=complex)
    s = np.arange(dim)
    src = s[(s >> j) & 1 == 1]
    sign = 1.0 - 2.0 * (prefix_j[src] & 1)
    out[src ^ (1 << j)] = sign * psi[src]
    return out


def _state_momentum_matrices(psi: np.ndarray, L: int, tables, phases):
    """<psi_P| c^dag(k) c(q) |psi_P> for both parity projections of psi."""
    _s, prefix, parity = tables
    e_ap, e_p = phases
    results = []
    for want_par, phase in ((0, e_ap), (1, e_p)):
        psi_p = np.where(parity == want_par, psi, 0.0)
        if not np.vdot(psi_p, psi_p).real > 0:
            results.append(np.zeros((L, L), dtype=complex))
            continue
        w = np.stack([_apply_annihilation(psi_p, j, prefix[j]) for j in range(L)])
        c_real = np.conj(w) @ w.T  # C[j, l] = <c_j psi, c_l psi>
        results.append(np.conj(phase).T @ c_real @ phase / L)
    return results  # [C_ap, C_p]


def _site_phases(L: int):
    """Columns e^{-i q j} mapping site correlators to momentum space."""
    q_ap, q_p, _ = momentum_sets(L)
    j = np.arange(L)
    e_ap = np.exp(-1j * np.outer(j, q_ap))
    e_p = np.exp(-1j * np.outer(j, q_p))
    return e_ap, e_p


def momentum_correlations(
    ensemble: TrajectoryEnsemble, checkpoint: int
) -> MomentumCorrelations:
    """Per-trajectory sector momentum correlation matrices at a checkpoint."""
    L = ensemble.config.L
    tables = _jw_tables(L)
    phases = _site_phases(L)
    q_ap, q_p, _ = momentum_sets(L)
    psi_batch = ensemble.states[checkpoint]
    samples_ap = np.empty((psi_batch.shape[0], L, L), dtype=complex)
    samples_p = np.empty_like(samples_ap)
    for i, psi in enumerate(psi_batch):
        c_ap, c_p = _state_momentum_matrices(psi, L, tables, phases)
        samples_ap[i] = c_ap
        samples_p[i] = c_p
    return MomentumCorrelations(
        L=L, momenta_ap=q_ap, momenta_p=q_p,
        samples_ap=samples_ap, samples_p=samples_p,
    )


def momentum_occupations(source, checkpoint: int | None = None, L: int | None = None):
    """Sector occupations and the interleaved rho_tilde.

    `source` is either a TrajectoryEnsemble (with a checkpoint index) or a
    density matrix (with the site count L).
    """
    if isinstance(source, TrajectoryEnsemble):
        if checkpoint is None:
            raise ValueError("a checkpoint index is required for an ensemble")
        corr = momentum_correlations(source, checkpoint)
        occ_ap = np.einsum("tkk->tk", corr.samples_ap).real
        occ_p = np.einsum("tkk->tk", corr.samples_p).real
        return _assemble(corr.L, occ_ap, occ_p)
    rho = np.asarray(source)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square density matrix")
    if L is None:
        L = int(round(np.log2(rho.shape[0])))
    if 1 << L != rho.shape[0]:
        raise ValueError(f"matrix dimension {rho.shape[0]} is not 2^{L}")
    tables = _jw_tables(L)
    phases = _site_phases(L)
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    occ_ap = np.zeros(L)
    occ_p = np.zeros(L)
    for lam, vec in zip(evals, evecs.T):
        if lam < 1e-14:
            continue
        c_ap, c_p = _state_momentum_matrices(vec.astype(complex), L, tables, phases)
        occ_ap += lam * np.diag(c_ap).real
        occ_p += lam * np.diag(c_p).real
    return _assemble(L, occ_ap[None, :], occ_p[None, :])


def _assemble(L: int, occ_ap: np.ndarray, occ_p: np.ndarray) -> SectorOccupations:
    q_ap, q_p, q_tilde = momentum_sets(L)
    n = occ_ap.shape[0]

    def stats(x):
        mean = x.mean(axis=0)
        err = x.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(L)
        return mean, err

    ap_mean, ap_err = stats(occ_ap)
    p_mean, p_err = stats(occ_p)
    tilde_mean, tilde_err = stats(occ_ap + occ_p)
    return SectorOccupations(
        L=L,
        momenta_ap=q_ap, momenta_p=q_p, momenta_tilde=q_tilde,
        rho_ap=ap_mean, rho_p=p_mean, rho_tilde=tilde_mean,
        stderr_ap=ap_err, stderr_p=p_err, stderr_tilde=tilde_err,
    )
