"""Finite-chain benchmarks: operators, unraveling, Lindblad, occupations."""

import math

import numpy as np
import pytest
from scipy import sparse

from openxx.dynamics import DomainError, ModelParams
from openxx.bench import (
    SpinChainConfig,
    build_jump_rate_operator,
    build_operators,
    dense_lindblad,
    initial_product_state,
    momentum_correlations,
    momentum_occupations,
    run_trajectories,
)
from openxx.bench.occupations import momentum_sets
from openxx.bench.operators import site_density
from openxx.bench.trajectories import _chain_operators


def params(kappa=0.02, phi=-math.pi / 2, theta=0.0, J=1.0):
    return ModelParams(kappa=kappa, phi=phi, theta=theta, J=J)


def all_up(L):
    return initial_product_state(0.0, L)


# operators ----------------------------------------------------------------


def test_hamiltonian_conserves_magnetization():
    L = 4
    H, _ = build_operators(L, params())
    counts = np.array([bin(s).count("1") for s in range(1 << L)], dtype=float)
    n_op = sparse.diags(counts)
    comm = H @ n_op - n_op @ H
    assert abs(comm).max() == 0.0


def test_hamiltonian_hermitian_and_jumps_lower():
    L = 5
    H, jumps = build_operators(L, params(phi=0.4))
    assert abs((H - H.getH())).max() == 0.0
    counts = np.array([bin(s).count("1") for s in range(1 << L)], dtype=float)
    n_op = sparse.diags(counts)
    for lj in jumps:
        lowered = n_op @ lj - lj @ (n_op - sparse.identity(1 << L))
        assert abs(lowered).max() < 1e-14


def test_jump_norm_on_all_up_state():
    # hand evaluation: the two single-down components are orthogonal,
    # so the norm is 2, independent of the phase
    L = 4
    up = all_up(L)
    for phi in (0.0, -math.pi / 2, math.pi):
        _, jumps = build_operators(L, params(phi=phi))
        for lj in jumps:
            v = lj @ up
            assert np.vdot(v, v).real == pytest.approx(2.0, abs=1e-14)


def test_plane_wave_rates():
    # single-particle plane waves feel the loss rate 2 (1 + cos(q + phi))
    L = 6
    phi = 0.7
    rate_op = build_jump_rate_operator(L, params(phi=phi))
    j = np.arange(L)
    for q in 2.0 * np.pi * np.arange(L) / L:
        psi = np.zeros(1 << L, dtype=complex)
        psi[1 << j] = np.exp(1j * q * j) / math.sqrt(L)
        got = np.vdot(psi, rate_op @ psi).real
        assert got == pytest.approx(2.0 * (1.0 + math.cos(q + phi)), abs=1e-12)


def test_jump_rate_operator_matches_sum():
    L = 5
    p = params(phi=-1.2)
    _, jumps = build_operators(L, p)
    direct = sum(lj.getH() @ lj for lj in jumps)
    assembled = build_jump_rate_operator(L, p)
    assert abs(direct - assembled).max() < 1e-14


def test_reciprocal_pi_jump_annihilates_symmetric_pair():
    # at phi = pi the in-phase two-site state is dark for its bond operator
    L = 4
    _, jumps = build_operators(L, params(phi=math.pi))
    psi = np.zeros(1 << L, dtype=complex)
    psi[0b0001] = 1 / math.sqrt(2)  # up at site 0
    psi[0b0010] = 1 / math.sqrt(2)  # up at site 1
    out = jumps[0] @ psi
    assert np.abs(out).max() < 1e-14


def test_operator_size_limits():
    with pytest.raises(DomainError):
        build_operators(3, params())
    with pytest.raises(DomainError):
        build_operators(15, params())


def test_initial_product_state_norm_and_density():
    for theta in (0.0, 0.4, math.pi / 4):
        psi = initial_product_state(theta, 6)
        assert np.vdot(psi, psi).real == pytest.approx(1.0, abs=1e-12)
        dens = site_density(6, psi)
        assert np.abs(dens - math.cos(theta) ** 2).max() < 1e-12


def test_effective_hamiltonian_is_normal():
    ops = _chain_operators(6, 1.0, 0.5, -math.pi / 2)
    h = ops.h_eff.toarray()
    comm = h @ h.conj().T - h.conj().T @ h
    assert np.abs(comm).max() < 1e-12
    for sector in ops.sectors:
        assert np.all(sector.eigs.imag <= 0.0)


# trajectories ---------------------------------------------------------------


def test_trajectories_deterministic():
    cfg = SpinChainConfig(
        L=4, params=params(kappa=0.5), n_traj=20, seed=123, checkpoints=(0.5, 1.0)
    )
    a = run_trajectories(cfg)
    b = run_trajectories(cfg)
    assert a.jump_log == b.jump_log
    for sa, sb in zip(a.states, b.states):
        assert np.array_equal(sa, sb)
    assert a.stream_keys == [(123, i) for i in range(20)]


def test_trajectories_states_normalized():
    cfg = SpinChainConfig(
        L=5, params=params(kappa=0.3, theta=math.pi / 4), n_traj=10, seed=5,
        checkpoints=(0.2, 1.0, 3.0),
    )
    ens = run_trajectories(cfg)
    for batch in ens.states:
        norms = np.linalg.norm(batch, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-10


def test_trajectories_unitary_limit_no_jumps():
    # kappa -> 0: no jumps over t ~ 1/J and zero ensemble variance
    cfg = SpinChainConfig(
        L=4, params=params(kappa=1e-8, theta=0.3), n_traj=16, seed=9,
        checkpoints=(1e-8,),  # kt = 1e-8 means t = 1/J
    )
    ens = run_trajectories(cfg)
    assert all(len(jl) == 0 for jl in ens.jump_log)
    samples = ens.site_density_samples(0)
    assert samples.std() < 1e-12


def test_trajectories_empty_at_long_times():
    # L = 5, phi = 0: no reachable dark state, every trajectory empties
    cfg = SpinChainConfig(
        L=5, params=params(kappa=0.5, phi=0.0), n_traj=30, seed=3,
        checkpoints=(50.0,),
    )
    ens = run_trajectories(cfg)
    n_mean, _ = ens.density_series()
    assert n_mean[-1] < 1e-6
    vac = np.zeros(1 << 5)
    vac[0] = 1.0
    overlap = np.abs(ens.states[-1] @ vac)
    assert overlap.min() > 1 - 1e-9


def test_trajectory_jump_count_bounded_by_filling():
    cfg = SpinChainConfig(
        L=4, params=params(kappa=1.0, theta=0.0), n_traj=25, seed=11,
        checkpoints=(20.0,),
    )
    ens = run_trajectories(cfg)
    for jl in ens.jump_log:
        assert len(jl) <= 4  # each jump removes exactly one particle
        times = [t for t, _site in jl]
        assert times == sorted(times)


@pytest.mark.parametrize("theta", [0.0, math.pi / 4])
@pytest.mark.parametrize("phi", [0.0, -math.pi / 2])
def test_trajectories_match_dense_lindblad(theta, phi):
    cfg = SpinChainConfig(
        L=4, params=params(kappa=0.02, phi=phi, theta=theta), n_traj=300, seed=21,
        checkpoints=(0.5, 1.0, 2.0),
    )
    ens = run_trajectories(cfg)
    n_mean, n_err = ens.density_series()
    dense = dense_lindblad(cfg)
    assert np.all(np.abs(n_mean - dense.series.n) <= 3.0 * n_err)


def test_substep_propagator_agrees_with_exact():
    base = dict(L=4, params=params(kappa=0.4), n_traj=6, seed=77,
                checkpoints=(0.25, 0.75))
    exact = run_trajectories(SpinChainConfig(**base, propagator="exact"))
    substep = run_trajectories(SpinChainConfig(**base, propagator="substep"))
    # same thresholds, same channels: jump logs agree to integrator accuracy
    for ja, jb in zip(exact.jump_log, substep.jump_log):
        assert len(ja) == len(jb)
        for (ta, sa), (tb, sb) in zip(ja, jb):
            assert sa == sb
            assert abs(ta - tb) < 1e-5
    for sa, sb in zip(exact.states, substep.states):
        assert np.abs(np.abs(sa) - np.abs(sb)).max() < 1e-5


def test_config_validation():
    with pytest.raises(DomainError):
        SpinChainConfig(L=4, params=params(), n_traj=0, seed=1, checkpoints=(1.0,))
    with pytest.raises(DomainError):
        SpinChainConfig(L=4, params=params(), n_traj=1, seed=1, checkpoints=())
    with pytest.raises(DomainError):
        SpinChainConfig(L=4, params=params(), n_traj=1, seed=1,
                        checkpoints=(1.0, 0.5))
    with pytest.raises(DomainError):
        SpinChainConfig(L=4, params=params(), n_traj=1, seed=1,
                        checkpoints=(1.0,), propagator="verlet")


# dense Lindblad -------------------------------------------------------------


def test_dense_lindblad_initial_conditions():
    cfg = SpinChainConfig(
        L=4, params=params(kappa=0.1, theta=0.5), n_traj=1, seed=1,
        checkpoints=(1e-8, 0.5, 1.0),
    )
    result = dense_lindblad(cfg)
    assert result.series.n[0] == pytest.approx(math.cos(0.5) ** 2, abs=1e-7)
    assert result.max_trace_drift < 1e-9
    for rho in result.rhos:
        assert np.abs(rho - rho.conj().T).max() < 1e-12


def test_dense_lindblad_purity_decreases_initially():
    # (it recovers at late times as the state purifies toward the vacuum)
    cfg = SpinChainConfig(
        L=4, params=params(kappa=0.2, theta=0.0), n_traj=1, seed=1,
        checkpoints=(1e-8, 0.2, 0.5),
    )
    result = dense_lindblad(cfg)
    assert result.purity[0] == pytest.approx(1.0, abs=1e-6)
    assert result.purity[1] < result.purity[0]
    assert result.purity[2] < result.purity[1]


def test_dense_lindblad_regression_value():
    # pinned from two independent integrations: fixed-step classical RK4 at
    # 20000 and 40000 steps both give 0.121632434382173 to 3e-15
    cfg = SpinChainConfig(
        L=4, params=params(kappa=0.02, phi=-math.pi / 2, theta=0.0), n_traj=1,
        seed=1, checkpoints=(1.0,),
    )
    result = dense_lindblad(cfg)
    assert result.series.n[0] == pytest.approx(0.121632434382173, abs=1e-9)


def test_dense_lindblad_size_limit():
    cfg = SpinChainConfig(
        L=8, params=params(), n_traj=1, seed=1, checkpoints=(1.0,)
    )
    with pytest.raises(DomainError):
        dense_lindblad(cfg)


# momentum occupations --------------------------------------------------------


def test_occupations_all_up_state():
    cfg = SpinChainConfig(
        L=6, params=params(kappa=1e-8), n_traj=2, seed=2, checkpoints=(1e-9,)
    )
    ens = run_trajectories(cfg)
    occ = momentum_occupations(ens, checkpoint=0)
    # even L: all-up state has even particle number, periodic sector empty
    assert np.abs(occ.rho_ap - 1.0).max() < 1e-10
    assert np.abs(occ.rho_p).max() < 1e-12
    assert occ.rho_ap.sum() == pytest.approx(6.0, abs=1e-9)
    assert np.abs(occ.rho_tilde - 1.0).max() < 1e-10


def test_occupations_vacuum_state():
    vac = np.zeros((1, 16), dtype=complex)
    vac[0, 0] = 1.0
    cfg = SpinChainConfig(L=4, params=params(), n_traj=1, seed=1, checkpoints=(1.0,))
    ens = run_trajectories(cfg)
    ens.states[0][:] = vac
    occ = momentum_occupations(ens, checkpoint=0)
    assert np.abs(occ.rho_tilde).max() < 1e-14


def test_occupations_match_density_bookkeeping():
    cfg = SpinChainConfig(
        L=6, params=params(kappa=0.1, theta=math.pi / 4, phi=0.3), n_traj=40,
        seed=8, checkpoints=(0.5, 2.0),
    )
    ens = run_trajectories(cfg)
    for c in range(2):
        occ = momentum_occupations(ens, checkpoint=c)
        n_mean, _ = ens.density_series()
        assert occ.rho_tilde.mean() == pytest.approx(n_mean[c], abs=1e-10)


def test_occupations_from_density_matrix_matches_trajectories():
    cfg = SpinChainConfig(
        L=4, params=params(kappa=0.05, theta=0.0), n_traj=400, seed=31,
        checkpoints=(1.0,),
    )
    dense = dense_lindblad(cfg)
    occ_dense = momentum_occupations(dense.rhos[0], L=4)
    ens = run_trajectories(cfg)
    occ_traj = momentum_occupations(ens, checkpoint=0)
    err = np.maximum(occ_traj.stderr_tilde, 1e-3)
    assert np.all(np.abs(occ_traj.rho_tilde - occ_dense.rho_tilde) <= 4 * err)


def test_momentum_sets_interleave():
    q_ap, q_p, q_tilde = momentum_sets(8)
    assert np.all(q_ap < q_p)
    assert np.all((q_tilde > q_ap) & (q_tilde < q_p))


def test_off_diagonal_translational_invariance():
    cfg = SpinChainConfig(
        L=6, params=params(kappa=0.05, theta=0.0), n_traj=300, seed=17,
        checkpoints=(1.0,),
    )
    ens = run_trajectories(cfg)
    corr = momentum_correlations(ens, checkpoint=0)
    for samples in (corr.samples_ap, corr.samples_p):
        mean = samples.mean(axis=0)
        spread = samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])
        off = ~np.eye(6, dtype=bool)
        ok = (np.abs(mean) <= 4.0 * np.maximum(spread, 1e-12)) | (np.abs(mean) < 1e-12)
        assert np.all(ok[off])
