"""Run orchestration: dispatch solver/bench/fit jobs and write artifacts.

Every run directory receives deterministic delimited output (shortest
round-trip float formatting), a `run_manifest` capturing the resolved
configuration, and a self-contained plotting script; figures are rendered
alongside unless disabled.  Reruns with an identical config yield
byte-identical data files (the manifest's wall-time field aside).
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import dense_lindblad, momentum_occupations, run_trajectories
from .bench.trajectories import SpinChainConfig
from .dynamics import (
    IntegratorConfig,
    evolve,
    free_fermion_exact,
    initial_rapidity,
    tgge_rhs,
)
from .observables import (
    FitError,
    ObservableSeries,
    fit_gaussian_peak,
    fit_power_law,
    log_derivatives,
    ratio_series,
)
from .runconfig import ConfigError, RunConfig, config_as_dict
from .report import emit_plot_script, render_figures

SERIES_HEADER = "kt,n,current_over_J,energy_over_J,D1,D2"


def _fmt(x) -> str:
    """Shortest round-trip decimal; empty field for missing values."""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _write_lines(path: Path, lines):
    path.write_text("\n".join(lines) + "\n")


def write_series_csv(path: Path, series: ObservableSeries):
    try:
        ld = log_derivatives(series)
        d1, d2 = ld.d1, ld.d2
    except FitError:
        d1 = d2 = np.full(len(series), np.nan)
    lines = [SERIES_HEADER]
    for i in range(len(series)):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    series.times[i],
                    series.n[i],
                    series.current[i],
                    series.energy[i],
                    d1[i],
                    d2[i],
                )
            )
        )
    _write_lines(path, lines)


def write_series_jsonl(path: Path, series: ObservableSeries):
    """Secondary interchange: one JSON record per checkpoint."""
    try:
        ld = log_derivatives(series)
        d1, d2 = ld.d1, ld.d2
    except FitError:
        d1 = d2 = np.full(len(series), np.nan)
    records = []
    for i in range(len(series)):
        records.append(
            {
                "kt": float(series.times[i]),
                "n": float(series.n[i]),
                "current_over_J": float(series.current[i]),
                "energy_over_J": float(series.energy[i]),
                "D1": _json_float(d1[i]),
                "D2": _json_float(d2[i]),
            }
        )
    write_fits(path, records)


def write_rapidity_csv(path: Path, k: np.ndarray, rho: np.ndarray):
    lines = ["k,rho"]
    lines.extend(f"{_fmt(ki)},{_fmt(ri)}" for ki, ri in zip(k, rho))
    _write_lines(path, lines)


def snapshot_name(kt: float) -> str:
    return f"rapidity_{_fmt(kt)}.csv"


def write_manifest(outdir: Path, cfg: RunConfig, wall_time: float, extra: dict | None = None):
    doc = {
        "code_version": __version__,
        "config": config_as_dict(cfg),
        "seed": cfg.values.get("seed"),
        "wall_time_s": wall_time,
    }
    if extra:
        doc.update(extra)
    (outdir / "run_manifest").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def write_fits(path: Path, records: list[dict]):
    lines = [json.dumps(rec, sort_keys=True) for rec in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def run(cfg: RunConfig) -> int:
    """Execute one configured run; returns the process exit status."""
    t_start = time.time()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)

    if cfg.mode in ("tgge", "free-fermion"):
        _run_rapidity(cfg, outdir)
    elif cfg.mode == "trajectories":
        _run_trajectories(cfg, outdir)
    elif cfg.mode == "dense-lindblad":
        _run_dense(cfg, outdir)
    elif cfg.mode == "compare":
        _run_compare(cfg, outdir)
    elif cfg.mode == "fit":
        _run_fit(cfg)
        write_manifest(Path(cfg.run_dir), cfg, time.time() - t_start,
                       {"artifact": "fits"})
        return 0
    else:  # pragma: no cover - guarded by parse_config
        raise ConfigError(f"unknown mode {cfg.mode}")

    write_manifest(outdir, cfg, time.time() - t_start)
    emit_plot_script(outdir)
    if cfg.figures:
        render_figures(outdir)
    return 0


def _merged_checkpoints(cfg: RunConfig) -> tuple[float, ...]:
    merged = sorted(set(cfg.checkpoints) | set(cfg.snapshots))
    if not merged:
        return ()
    return tuple(merged)


def _run_rapidity(cfg: RunConfig, outdir: Path):
    from .spectral import FourierGrid

    params = cfg.params
    grid = FourierGrid(cfg.M)
    checkpoints = _merged_checkpoints(cfg)
    if cfg.mode == "free-fermion":
        states = [
            free_fermion_exact(params.theta, params.phi, params.kappa, kt / params.kappa, grid)
            for kt in checkpoints
        ]
    else:
        integ = IntegratorConfig(
            checkpoints=tuple(kt / params.kappa for kt in checkpoints),
            rel_tol=cfg.rel_tol,
            abs_tol=cfg.abs_tol,
            dt_init=cfg.dt_init,
            max_steps=cfg.max_steps,
        )
        states = list(evolve(initial_rapidity(params.theta, grid), tgge_rhs, params, integ))

    series = ObservableSeries.from_states(states, params, provenance=cfg.mode)
    write_series_csv(outdir / "series.csv", series)
    if cfg.format == "json-lines":
        write_series_jsonl(outdir / "series.json-lines", series)
    by_kt = {params.kappa * s.time: s for s in states}
    for kt in cfg.snapshots:
        state = by_kt[min(by_kt, key=lambda t: abs(t - kt))]
        write_rapidity_csv(outdir / snapshot_name(kt), grid.nodes, state.clamped())
    write_fits(outdir / "fits.json-lines", _fit_records(cfg, series, states))


def _fit_records(cfg: RunConfig, series: ObservableSeries, states=None) -> list[dict]:
    records = []
    window = (cfg.fit_window_lo, cfg.fit_window_hi)
    try:
        fit = fit_power_law(series, window)
        records.append(
            {
                "type": "power_law",
                "window": list(fit.window),
                "chi": fit.chi,
                "stderr": fit.stderr,
                "n_points": fit.n_points,
            }
        )
    except FitError:
        pass
    if states:
        hint = cfg.gauss_hint
        if math.isnan(hint):
            hint = (math.pi - cfg.phi) % (2.0 * math.pi)
        state = states[-1]
        try:
            g = fit_gaussian_peak(state, hint)
            records.append(
                {
                    "type": "gaussian_peak",
                    "kt": cfg.params.kappa * state.time,
                    "amplitude": g.amplitude,
                    "sigma": g.sigma,
                    "center": g.center,
                    "residual": g.residual,
                    "hint": hint,
                }
            )
        except FitError:
            pass
    return records


def _spin_chain_config(cfg: RunConfig) -> SpinChainConfig:
    return SpinChainConfig(
        L=cfg.L,
        params=cfg.params,
        n_traj=cfg.n_traj,
        seed=cfg.seed,
        checkpoints=_merged_checkpoints(cfg),
        norm_tol=cfg.norm_tol,
        propagator=cfg.propagator,
    )


def _bench_series(ensemble, chain_cfg: SpinChainConfig) -> ObservableSeries:
    from .bench.lindblad import _current_operator
    from .bench.operators import build_operators

    p = chain_cfg.params
    H, _ = build_operators(chain_cfg.L, p)
    curr_op = _current_operator(chain_cfg.L, p.J)
    n_mean, _ = ensemble.density_series()
    currents, energies = [], []
    for c in range(len(chain_cfg.checkpoints)):
        currents.append(
            ensemble.expectation_samples(c, curr_op).mean() / (chain_cfg.L * p.J)
        )
        energies.append(
            ensemble.expectation_samples(c, H).mean() / (chain_cfg.L * p.J)
        )
    return ObservableSeries(
        times=np.asarray(chain_cfg.checkpoints),
        n=n_mean,
        current=np.array(currents),
        energy=np.array(energies),
        provenance=f"trajectories L={chain_cfg.L} n_traj={chain_cfg.n_traj}",
    )


def _run_trajectories(cfg: RunConfig, outdir: Path):
    chain_cfg = _spin_chain_config(cfg)
    ensemble = run_trajectories(chain_cfg)
    series = _bench_series(ensemble, chain_cfg)
    write_series_csv(outdir / "series.csv", series)
    if cfg.format == "json-lines":
        write_series_jsonl(outdir / "series.json-lines", series)
    for kt in cfg.snapshots:
        c = chain_cfg.checkpoints.index(kt)
        occ = momentum_occupations(ensemble, checkpoint=c)
        write_rapidity_csv(outdir / snapshot_name(kt), occ.momenta_tilde, occ.rho_tilde)


def _run_dense(cfg: RunConfig, outdir: Path):
    chain_cfg = _spin_chain_config(cfg)
    result = dense_lindblad(chain_cfg)
    write_series_csv(outdir / "series.csv", result.series)
    if cfg.format == "json-lines":
        write_series_jsonl(outdir / "series.json-lines", result.series)
    for kt in cfg.snapshots:
        c = chain_cfg.checkpoints.index(kt)
        occ = momentum_occupations(result.rhos[c], L=cfg.L)
        write_rapidity_csv(outdir / snapshot_name(kt), occ.momenta_tilde, occ.rho_tilde)


def _run_compare(cfg: RunConfig, outdir: Path):
    """Spectral solver vs trajectory ensemble on the interleaved momenta."""
    from .spectral import FourierGrid, PeriodicFunction

    params = cfg.params
    chain_cfg = _spin_chain_config(cfg)
    grid = FourierGrid(cfg.M)
    integ = IntegratorConfig(
        checkpoints=tuple(kt / params.kappa for kt in chain_cfg.checkpoints),
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        dt_init=cfg.dt_init,
        max_steps=cfg.max_steps,
    )
    states = list(evolve(initial_rapidity(params.theta, grid), tgge_rhs, params, integ))
    ensemble = run_trajectories(chain_cfg)

    lines = ["kt,max_abs_delta"]
    deltas = []
    for c, kt in enumerate(chain_cfg.checkpoints):
        occ = momentum_occupations(ensemble, checkpoint=c)
        f = PeriodicFunction(grid, states[c].clamped())
        ref = f.interp(occ.momenta_tilde)
        delta = float(np.max(np.abs(occ.rho_tilde - ref)))
        deltas.append(delta)
        lines.append(f"{_fmt(kt)},{_fmt(delta)}")
    _write_lines(outdir / "delta.csv", lines)

    write_series_csv(outdir / "series.csv", ObservableSeries.from_states(states, params, "compare/tgge"))
    bench = _bench_series(ensemble, chain_cfg)
    write_series_csv(outdir / "bench_series.csv", bench)
    if max(deltas) > cfg.delta_tol:
        raise RuntimeError(
            f"compare: max |rho_tilde - rho| = {max(deltas):.4f} exceeds "
            f"delta_tol = {cfg.delta_tol}"
        )


def _run_fit(cfg: RunConfig):
    run_dir = Path(cfg.run_dir)
    series_path = run_dir / "series.csv"
    if not series_path.exists():
        raise ConfigError(f"mode 'fit': no series.csv under {run_dir}")
    series = read_series_csv(series_path)
    records = []
    window = (cfg.fit_window_lo, cfg.fit_window_hi)
    fit = fit_power_law(series, window)
    records.append(
        {
            "type": "power_law",
            "window": list(window),
            "chi": fit.chi,
            "stderr": fit.stderr,
            "n_points": fit.n_points,
        }
    )
    ratios = ratio_series(series)
    records.append(
        {
            "type": "late_time_ratios",
            "kt": float(series.times[-1]),
            "current_over_jn": _json_float(ratios.current_over_jn[-1]),
            "energy_over_jn": _json_float(ratios.energy_over_jn[-1]),
            "current_over_energy": _json_float(ratios.current_over_energy[-1]),
        }
    )
    hint = cfg.gauss_hint
    manifest_path = run_dir / "run_manifest"
    if math.isnan(hint) and manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        phi = manifest.get("config", {}).get("phi")
        if phi is not None:
            hint = (math.pi - phi) % (2.0 * math.pi)
    snapshots = sorted(run_dir.glob("rapidity_*.csv"))
    if snapshots and not math.isnan(hint):
        k, rho = read_rapidity_csv(snapshots[-1])
        from .spectral import FourierGrid
        from .dynamics import RapidityState

        try:
            grid = FourierGrid(k.size)
            state = RapidityState(grid, rho, 0.0)
            g = fit_gaussian_peak(state, hint)
            records.append(
                {
                    "type": "gaussian_peak",
                    "source": snapshots[-1].name,
                    "amplitude": g.amplitude,
                    "sigma": g.sigma,
                    "center": g.center,
                    "residual": g.residual,
                }
            )
        except (FitError, ValueError):
            pass
    write_fits(run_dir / "fits.json-lines", records)


def _json_float(x: float):
    return None if math.isnan(x) else float(x)


def read_series_csv(path: Path) -> ObservableSeries:
    rows = path.read_text().strip().splitlines()
    if rows[0] != SERIES_HEADER:
        raise ConfigError(f"{path}: unexpected header {rows[0]!r}")
    cols = [[], [], [], []]
    for row in rows[1:]:
        parts = row.split(",")
        for i in range(4):
            cols[i].append(float(parts[i]) if parts[i] else math.nan)
    return ObservableSeries(
        times=np.array(cols[0]),
        n=np.array(cols[1]),
        current=np.array(cols[2]),
        energy=np.array(cols[3]),
        provenance=str(path),
    )


def read_rapidity_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = path.read_text().strip().splitlines()
    if rows[0] != "k,rho":
        raise ConfigError(f"{path}: unexpected header {rows[0]!r}")
    k, rho = [], []
    for row in rows[1:]:
        a, b = row.split(",")
        k.append(float(a))
        rho.append(float(b))
    return np.array(k), np.array(rho)
