"""Figure rendering and plot-script emission for run directories.

`render_figures` draws the standard panels (density decay, logarithmic
derivatives, rapidity snapshots, observable ratios, solver-vs-benchmark
delta) straight from the delimited artifacts.  `emit_plot_script` writes a
self-contained matplotlib script that reads only the CSV files, so a run
directory can be re-plotted without this package installed.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class MissingArtifacts(FileNotFoundError):
    """The run directory lacks the files needed for plotting."""


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    rows = path.read_text().strip().splitlines()
    names = rows[0].split(",")
    cols = [[] for _ in names]
    for row in rows[1:]:
        for i, cell in enumerate(row.split(",")):
            cols[i].append(float(cell) if cell else math.nan)
    return {name: np.asarray(col) for name, col in zip(names, cols)}


def _artifacts(run_dir: Path):
    series = run_dir / "series.csv"
    snapshots = sorted(run_dir.glob("rapidity_*.csv"),
                       key=lambda p: float(p.stem.split("_", 1)[1]))
    delta = run_dir / "delta.csv"
    return series if series.exists() else None, snapshots, delta if delta.exists() else None


def render_figures(run_dir: str | Path) -> list[Path]:
    """Render the standard panels to PNG files next to the data."""
    run_dir = Path(run_dir)
    series_path, snapshots, delta_path = _artifacts(run_dir)
    if series_path is None and not snapshots and delta_path is None:
        raise MissingArtifacts(
            f"nothing to plot under {run_dir}: no series.csv, rapidity_*.csv or delta.csv"
        )
    written: list[Path] = []

    if series_path is not None:
        data = _read_csv(series_path)
        positive = data["n"] > 0
        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        ax.loglog(data["kt"][positive], data["n"][positive], lw=1.2)
        ax.set_xlabel(r"$\kappa t$")
        ax.set_ylabel(r"$n$")
        written.append(run_dir / "fig_density.png")
        fig.savefig(written[-1], dpi=160)
        plt.close(fig)

        if np.any(np.isfinite(data["D1"])):
            fig, axes = plt.subplots(2, 1, figsize=(5, 5), sharex=True,
                                     constrained_layout=True)
            axes[0].semilogx(data["kt"], data["D1"], lw=1.2)
            axes[0].set_ylabel(r"$\mathcal{D}_1$")
            axes[1].semilogx(data["kt"], data["D2"], lw=1.2)
            axes[1].axhline(0.0, color="0.6", lw=0.6)
            axes[1].set_ylabel(r"$\mathcal{D}_2$")
            axes[1].set_xlabel(r"$\kappa t$")
            written.append(run_dir / "fig_logderiv.png")
            fig.savefig(written[-1], dpi=160)
            plt.close(fig)

        nonzero = data["n"] != 0
        if np.any(nonzero):
            fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
            ax.semilogx(data["kt"][nonzero],
                        data["current_over_J"][nonzero] / data["n"][nonzero],
                        lw=1.2, label=r"$\mathcal{J}/(Jn)$")
            ax.semilogx(data["kt"][nonzero],
                        data["energy_over_J"][nonzero] / data["n"][nonzero],
                        lw=1.2, label=r"$\varepsilon/(Jn)$")
            ax.set_xlabel(r"$\kappa t$")
            ax.legend(frameon=False)
            written.append(run_dir / "fig_ratios.png")
            fig.savefig(written[-1], dpi=160)
            plt.close(fig)

    if snapshots:
        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        for path in snapshots:
            data = _read_csv(path)
            kt = path.stem.split("_", 1)[1]
            ax.plot(data["k"], data["rho"], lw=1.0, label=rf"$\kappa t = {kt}$")
        ax.set_xlabel(r"$k$")
        ax.set_ylabel(r"$\varrho(k)$")
        ax.set_xlim(0, 2 * np.pi)
        ax.legend(frameon=False, fontsize=8)
        written.append(run_dir / "fig_rapidity.png")
        fig.savefig(written[-1], dpi=160)
        plt.close(fig)

    if delta_path is not None:
        data = _read_csv(delta_path)
        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        ax.semilogx(data["kt"], data["max_abs_delta"], "o-", lw=1.0)
        ax.set_xlabel(r"$\kappa t$")
        ax.set_ylabel(r"$\max_k |\tilde\varrho - \varrho|$")
        written.append(run_dir / "fig_delta.png")
        fig.savefig(written[-1], dpi=160)
        plt.close(fig)

    return written


_SCRIPT_TEMPLATE = '''#!/usr/bin/env python3
"""Standalone plots for this run directory; reads only the CSV files."""

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    cols = {name: [] for name in names}
    for row in rows[1:]:
        for name, cell in zip(names, row):
            cols[name].append(float(cell) if cell else math.nan)
    return cols


def main():
    series = HERE / "series.csv"
    if series.exists():
        data = read_csv(series)
        kt = data["kt"]
        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        pos = [(t, n) for t, n in zip(kt, data["n"]) if n > 0]
        if pos:
            ax.loglog([p[0] for p in pos], [p[1] for p in pos], lw=1.2)
        ax.set_xlabel("kappa t")
        ax.set_ylabel("n")
        fig.savefig(HERE / "fig_density.png", dpi=160)
        plt.close(fig)

        if any(not math.isnan(v) for v in data["D1"]):
            fig, axes = plt.subplots(2, 1, figsize=(5, 5), sharex=True,
                                     constrained_layout=True)
            axes[0].semilogx(kt, data["D1"], lw=1.2)
            axes[0].set_ylabel("D1")
            axes[1].semilogx(kt, data["D2"], lw=1.2)
            axes[1].axhline(0.0, color="0.6", lw=0.6)
            axes[1].set_ylabel("D2")
            axes[1].set_xlabel("kappa t")
            fig.savefig(HERE / "fig_logderiv.png", dpi=160)
            plt.close(fig)

        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        ok = [i for i, n in enumerate(data["n"]) if n != 0]
        ax.semilogx([kt[i] for i in ok],
                    [data["current_over_J"][i] / data["n"][i] for i in ok],
                    lw=1.2, label="J/(Jn)")
        ax.semilogx([kt[i] for i in ok],
                    [data["energy_over_J"][i] / data["n"][i] for i in ok],
                    lw=1.2, label="eps/(Jn)")
        ax.set_xlabel("kappa t")
        ax.legend(frameon=False)
        fig.savefig(HERE / "fig_ratios.png", dpi=160)
        plt.close(fig)

    snapshots = sorted(HERE.glob("rapidity_*.csv"),
                       key=lambda p: float(p.stem.split("_", 1)[1]))
    if snapshots:
        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        for path in snapshots:
            data = read_csv(path)
            ax.plot(data["k"], data["rho"], lw=1.0,
                    label="kt = " + path.stem.split("_", 1)[1])
        ax.set_xlabel("k")
        ax.set_ylabel("rho(k)")
        ax.legend(frameon=False, fontsize=8)
        fig.savefig(HERE / "fig_rapidity.png", dpi=160)
        plt.close(fig)

    delta = HERE / "delta.csv"
    if delta.exists():
        data = read_csv(delta)
        fig, ax = plt.subplots(figsize=(5, 3.4), constrained_layout=True)
        ax.semilogx(data["kt"], data["max_abs_delta"], "o-", lw=1.0)
        ax.set_xlabel("kappa t")
        ax.set_ylabel("max |rho_tilde - rho|")
        fig.savefig(HERE / "fig_delta.png", dpi=160)
        plt.close(fig)


if __name__ == "__main__":
    main()
'''


def emit_plot_script(run_dir: str | Path) -> Path:
    """Write plot_figures.py into the run directory and return its path."""
    run_dir = Path(run_dir)
    series_path, snapshots, delta_path = _artifacts(run_dir)
    if series_path is None and not snapshots and delta_path is None:
        missing = [str(run_dir / "series.csv"), str(run_dir / "rapidity_*.csv"),
                   str(run_dir / "delta.csv")]
        raise MissingArtifacts("no plottable artifacts; absent: " + ", ".join(missing))
    path = run_dir / "plot_figures.py"
    path.write_text(_SCRIPT_TEMPLATE)
    return path
