"""Quantum-jump (waiting-time) unraveling of the dissipative chain.

Between jumps the state evolves under the non-Hermitian generator
H_eff = H - (i kappa / 2) sum_j L_j^dag L_j, which conserves the total
up-spin number; a jump fires when the squared norm crosses a pre-drawn
uniform threshold, the crossing time resolved by bisection.  The channel
is sampled proportional to <L_j^dag L_j> and the state renormalized.

H and sum_j L_j^dag L_j commute (both are diagonal in the same momentum
modes within each particle-number parity sector), so H_eff is a normal
operator; the default propagator diagonalizes it once per magnetization
sector (unitary Schur basis) and evaluates e^{-i H_eff t} exactly at any
t.  A step-by-step adaptive Runge-Kutta propagator is kept as an option
and as a cross-check.

Trajectories use counter-based Philox streams keyed by (seed, index), so
ensembles are reproducible bit-for-bit and order-independent.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse

from .. import rk
from ..dynamics import DomainError, ModelParams
from .operators import (
    build_jump_rate_operator,
    build_operators,
    initial_product_state,
    sector_indices,
    _check_L,
)

NORM_DRIFT_LIMIT = 1e-6  # abort threshold for the substep propagator
_SECTOR_DROP = 1e-28  # squared-norm weight below which a block is dropped


class UnravelingError(RuntimeError):
    """Trajectory propagation failed its internal consistency checks."""


@dataclass(frozen=True)
class SpinChainConfig:
    """Finite-chain benchmark configuration.

    Checkpoints are dimensionless kt values.  `norm_tol` is the bisection
    tolerance on the squared norm at a jump; `propagator` selects the
    exact sector-diagonalized evolution ("exact", default) or adaptive
    Runge-Kutta substeps ("substep").
    """

    L: int
    params: ModelParams
    n_traj: int
    seed: int
    checkpoints: tuple[float, ...]
    norm_tol: float = 1e-8
    propagator: str = "exact"
    substep_rel_tol: float = 1e-10
    substep_abs_tol: float = 1e-13

    def __post_init__(self):
        _check_L(self.L)
        if self.n_traj < 1:
            raise DomainError(f"need at least one trajectory, got {self.n_traj}")
        cps = tuple(float(t) for t in self.checkpoints)
        if not cps:
            raise DomainError("checkpoint list must not be empty")
        if cps[0] <= 0 or any(b <= a for a, b in zip(cps, cps[1:])):
            raise DomainError("checkpoints must be positive and strictly increasing")
        if self.propagator not in ("exact", "substep"):
            raise DomainError(f"unknown propagator {self.propagator!r}")
        object.__setattr__(self, "checkpoints", cps)


@dataclass
class TrajectoryEnsemble:
    """Normalized pure states at each checkpoint, with RNG provenance.

    `states[c][i]` is trajectory i at checkpoint c (2^L complex
    amplitudes, unit norm); `jump_log[i]` lists (time, site) for each
    jump of trajectory i in physical time units.
    """

    config: SpinChainConfig
    states: list[np.ndarray]
    jump_log: list[list[tuple[float, int]]]
    stream_keys: list[tuple[int, int]]

    @property
    def n_traj(self) -> int:
        return self.config.n_traj

    def site_density_samples(self, checkpoint: int) -> np.ndarray:
        """Per-trajectory site-averaged density at one checkpoint."""
        psi = self.states[checkpoint]
        counts = np.bitwise_count(np.arange(psi.shape[1], dtype=np.uint64))
        return (np.abs(psi) ** 2 @ counts.astype(float)) / self.config.L

    def density_series(self) -> tuple[np.ndarray, np.ndarray]:
        """Ensemble density n(kt) and its standard error per checkpoint."""
        means, errs = [], []
        for c in range(len(self.states)):
            samples = self.site_density_samples(c)
            means.append(samples.mean())
            errs.append(samples.std(ddof=1) / math.sqrt(samples.size)
                        if samples.size > 1 else 0.0)
        return np.array(means), np.array(errs)

    def expectation_samples(self, checkpoint: int, op: sparse.spmatrix) -> np.ndarray:
        """Per-trajectory real expectation values of a Hermitian operator."""
        psi = self.states[checkpoint]
        return np.einsum("ts,ts->t", np.conj(psi), (op @ psi.T).T).real


@dataclass
class _Sector:
    indices: np.ndarray
    basis: np.ndarray  # unitary eigenbasis columns
    eigs: np.ndarray  # complex eigenvalues, Im <= 0


@dataclass
class _ChainOperators:
    H: sparse.csr_matrix
    jumps: list[sparse.csr_matrix]
    rate_op: sparse.csr_matrix
    h_eff: sparse.csr_matrix
    sectors: list[_Sector]


@lru_cache(maxsize=4)
def _chain_operators(L: int, J: float, kappa: float, phi: float) -> _ChainOperators:
    params = ModelParams(kappa=kappa, phi=phi, theta=0.0, J=J)
    H, jumps = build_operators(L, params)
    rate_op = build_jump_rate_operator(L, params)
    h_eff = (H - 0.5j * kappa * rate_op).tocsr()
    sectors = []
    for n_up in range(L + 1):
        ix = sector_indices(L, n_up)
        block = h_eff[np.ix_(ix, ix)].toarray()
        tmat, z = linalg.schur(block, output="complex")
        off = tmat - np.diag(np.diag(tmat))
        scale = max(1.0, float(np.abs(np.diag(tmat)).max()))
        if np.abs(off).max() > 1e-9 * scale:
            raise UnravelingError(
                f"effective Hamiltonian not normal in sector {n_up}: "
                f"off-diagonal {np.abs(off).max():.3e}"
            )
        eigs = np.diag(tmat).copy()
        eigs.imag = np.minimum(eigs.imag, 0.0)  # guard monotone norm decay
        sectors.append(_Sector(indices=ix, basis=z, eigs=eigs))
    return _ChainOperators(H=H, jumps=jumps, rate_op=rate_op, h_eff=h_eff, sectors=sectors)


class _BlockState:
    """State decomposed over magnetization sectors in the H_eff eigenbasis."""

    def __init__(self, ops: _ChainOperators, dim: int):
        self.ops = ops
        self.dim = dim
        self.blocks: dict[int, np.ndarray] = {}

    @classmethod
    def from_full(cls, ops: _ChainOperators, psi: np.ndarray) -> "_BlockState":
        self = cls(ops, psi.size)
        for n_up, sector in enumerate(ops.sectors):
            x = psi[sector.indices]
            if float(np.vdot(x, x).real) > _SECTOR_DROP:
                self.blocks[n_up] = sector.basis.conj().T @ x
        return self

    def norm_sq(self, s: float) -> float:
        total = 0.0
        for n_up, c in self.blocks.items():
            lam = 2.0 * self.ops.sectors[n_up].eigs.imag
            total += float(np.abs(c) ** 2 @ np.exp(lam * s))
        return total

    def reconstruct(self, s: float) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        for n_up, c in self.blocks.items():
            sector = self.ops.sectors[n_up]
            psi[sector.indices] = sector.basis @ (c * np.exp(-1j * sector.eigs * s))
        return psi


def run_trajectories(cfg: SpinChainConfig) -> TrajectoryEnsemble:
    """Unravel the master equation into `n_traj` pure-state trajectories.

    Deterministic for fixed (seed, n_traj, step control); trajectories are
    independent and merged in index order.  SIM_THREADS caps the worker
    pool (default 1).
    """
    p = cfg.params
    ops = _chain_operators(cfg.L, p.J, p.kappa, p.phi)
    psi0 = initial_product_state(p.theta, cfg.L)
    t_checkpoints = [kt / p.kappa for kt in cfg.checkpoints]
    dim = psi0.size

    states = [np.empty((cfg.n_traj, dim), dtype=complex) for _ in t_checkpoints]
    jump_log: list[list[tuple[float, int]]] = [[] for _ in range(cfg.n_traj)]
    keys = [(cfg.seed, i) for i in range(cfg.n_traj)]

    def worker(i: int):
        rng = np.random.Generator(
            np.random.Philox(key=np.array([cfg.seed, i], dtype=np.uint64))
        )
        if cfg.propagator == "exact":
            checkpoint_states, jumps = _trajectory_exact(
                ops, psi0, t_checkpoints, rng, cfg.norm_tol
            )
        else:
            checkpoint_states, jumps = _trajectory_substep(
                ops, psi0, t_checkpoints, rng, cfg
            )
        for c, psi in enumerate(checkpoint_states):
            states[c][i] = psi
        jump_log[i] = jumps

    n_workers = max(1, int(os.environ.get("SIM_THREADS", "1")))
    if n_workers == 1:
        for i in range(cfg.n_traj):
            worker(i)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(worker, range(cfg.n_traj)))

    return TrajectoryEnsemble(
        config=cfg, states=states, jump_log=jump_log, stream_keys=keys
    )


def _apply_jump(ops: _ChainOperators, psi: np.ndarray, rng) -> tuple[np.ndarray, int]:
    """Sample a channel with probability ~ <L_j^dag L_j> and collapse."""
    candidates = [lj @ psi for lj in ops.jumps]
    weights = np.array([float(np.vdot(v, v).real) for v in candidates])
    total = weights.sum()
    if not total > 0:
        raise UnravelingError("all jump weights vanish at a threshold crossing")
    u = rng.random() * total
    site = int(np.searchsorted(np.cumsum(weights), u))
    site = min(site, len(candidates) - 1)
    collapsed = candidates[site]
    return collapsed / np.linalg.norm(collapsed), site


def _trajectory_exact(ops, psi0, t_checkpoints, rng, norm_tol):
    out = []
    jumps: list[tuple[float, int]] = []
    t = 0.0
    block = _BlockState.from_full(ops, psi0.copy())
    threshold = rng.random()
    cp_iter = iter(t_checkpoints)
    next_cp = next(cp_iter)
    t_final = t_checkpoints[-1]

    while True:
        s_rem = t_final - t
        if block.norm_sq(s_rem) >= threshold:
            # no further jump inside the window: emit remaining checkpoints
            while True:
                psi = block.reconstruct(next_cp - t)
                out.append(psi / np.linalg.norm(psi))
                nxt = next(cp_iter, None)
                if nxt is None:
                    return out, jumps
                next_cp = nxt
        s_jump = _bisect_crossing(block, threshold, s_rem, norm_tol)
        while next_cp <= t + s_jump:
            psi = block.reconstruct(next_cp - t)
            out.append(psi / np.linalg.norm(psi))
            nxt = next(cp_iter, None)
            if nxt is None:
                return out, jumps
            next_cp = nxt
        psi = block.reconstruct(s_jump)
        psi, site = _apply_jump(ops, psi, rng)
        t += s_jump
        jumps.append((t, site))
        block = _BlockState.from_full(ops, psi)
        threshold = rng.random()


def _bisect_crossing(block: _BlockState, threshold: float, s_hi: float, tol: float):
    """Largest-bracket bisection for norm_sq(s) = threshold on [0, s_hi]."""
    lo, hi = 0.0, s_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = block.norm_sq(mid) - threshold
        if abs(g) <= tol or (hi - lo) <= 1e-15 * max(1.0, hi):
            return mid
        if g > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _trajectory_substep(ops, psi0, t_checkpoints, rng, cfg: SpinChainConfig):
    """Adaptive Runge-Kutta propagation with threshold detection.

    The state is augmented with the time-integrated decay rate w; the
    defect |norm^2 - w| is an a-posteriori error indicator and aborts the
    run beyond NORM_DRIFT_LIMIT (step control too loose).
    """
    h_eff = ops.h_eff

    def f(t, y):
        psi = y[:-1]
        hpsi = h_eff @ psi
        dw = 2.0 * float(np.vdot(psi, hpsi).imag)
        return np.concatenate([-1j * hpsi, [dw]])

    out = []
    jumps: list[tuple[float, int]] = []
    t = 0.0
    psi = psi0.copy()
    threshold = rng.random()
    w = 1.0  # integrated norm^2 along the trajectory
    cp_idx = 0
    dt = 0.1 / max(1.0, float(np.abs(h_eff).sum(axis=1).max()))

    y = np.concatenate([psi, [w]]).astype(complex)
    while cp_idx < len(t_checkpoints):
        t_target = t_checkpoints[cp_idx]
        sol = rk.integrate_adaptive(
            f, t, y, [t_target],
            rel_tol=cfg.substep_rel_tol, abs_tol=cfg.substep_abs_tol,
            dt_init=dt, max_steps=10_000_000,
        )
        # walk forward again step by step to catch the threshold crossing
        t_new, y_new = sol.times[0], sol.states[0]
        norm_sq = float(np.vdot(y_new[:-1], y_new[:-1]).real)
        if norm_sq > threshold:
            drift = abs(norm_sq - y_new[-1].real)
            if drift > NORM_DRIFT_LIMIT:
                raise UnravelingError(
                    f"norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT:.0e}; "
                    "step control too loose"
                )
            t, y = t_new, y_new
            psi = y[:-1]
            out.append(psi / np.linalg.norm(psi))
            cp_idx += 1
            continue
        # crossing inside (t, t_target]: bisect on the integration horizon
        lo_t, hi_t = t, t_new
        lo_y = y
        for _ in range(200):
            mid = 0.5 * (lo_t + hi_t)
            sol_mid = rk.integrate_adaptive(
                f, t, y, [mid],
                rel_tol=cfg.substep_rel_tol, abs_tol=cfg.substep_abs_tol,
                dt_init=dt, max_steps=10_000_000,
            )
            y_mid = sol_mid.states[0]
            g = float(np.vdot(y_mid[:-1], y_mid[:-1]).real) - threshold
            if abs(g) <= cfg.norm_tol or (hi_t - lo_t) <= 1e-14 * max(1.0, hi_t):
                lo_t, lo_y = mid, y_mid
                break
            if g > 0:
                lo_t, lo_y = mid, y_mid
            else:
                hi_t = mid
        psi_jump = lo_y[:-1]
        drift = abs(float(np.vdot(psi_jump, psi_jump).real) - lo_y[-1].real)
        if drift > NORM_DRIFT_LIMIT:
            raise UnravelingError(
                f"norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT:.0e}; "
                "step control too loose"
            )
        psi, site = _apply_jump(ops, psi_jump, rng)
        t = lo_t
        jumps.append((t, site))
        threshold = rng.random()
        y = np.concatenate([psi, [1.0]]).astype(complex)
    return out, jumps
