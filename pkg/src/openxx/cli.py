"""Command-line entry point.

    sim <mode> [--config FILE] [--kappa X --phi X --theta X --M N
               --out DIR --seed N --checkpoints log:t0:t1:count ...]

Modes: tgge, free-fermion, trajectories, dense-lindblad, fit, compare,
plus `report RUN_DIR` to re-render figures for an existing run.  CLI flags
override config-file values; unknown config keys are hard errors.  The
environment variable SIM_THREADS caps worker parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .runconfig import MODES, ConfigError, parse_config
from . import runner
from .report import MissingArtifacts, render_figures


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Non-reciprocal open XX chain simulator",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--kappa", type=float)
        p.add_argument("--phi", type=float)
        p.add_argument("--theta", type=float)
        p.add_argument("--J", type=float)
        p.add_argument("--M", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--seed", type=int)
        p.add_argument("--checkpoints", type=str, metavar="log:t0:t1:count")
        p.add_argument("--snapshots", type=str, metavar="kt1,kt2,...")
        p.add_argument("--L", type=int)
        p.add_argument("--n-traj", dest="n_traj", type=int)
        p.add_argument("--rel-tol", dest="rel_tol", type=float)
        p.add_argument("--abs-tol", dest="abs_tol", type=float)
        p.add_argument("--max-steps", dest="max_steps", type=int)
        p.add_argument("--propagator", choices=("exact", "substep"))
        p.add_argument("--format", choices=("csv", "json-lines"))
        p.add_argument("--fit-window-lo", dest="fit_window_lo", type=float)
        p.add_argument("--fit-window-hi", dest="fit_window_hi", type=float)
        p.add_argument("--gauss-hint", dest="gauss_hint", type=float)
        p.add_argument("--run-dir", dest="run_dir", type=str)
        p.add_argument("--delta-tol", dest="delta_tol", type=float)
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       default=None)

    for mode in MODES:
        add_common(sub.add_parser(mode, help=f"run in {mode} mode"))

    rep = sub.add_parser("report", help="render figures for an existing run")
    rep.add_argument("run_dir", type=Path)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.mode == "report":
        try:
            written = render_figures(args.run_dir)
        except MissingArtifacts as exc:
            print(json.dumps({"error": "missing-artifacts", "detail": str(exc)}),
                  file=sys.stderr)
            return 1
        for path in written:
            print(path)
        return 0

    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(json.dumps({"error": "config-io", "detail": str(exc)}),
                  file=sys.stderr)
            return 1
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("mode", "config") and value is not None
    }
    overrides["mode"] = args.mode
    try:
        cfg = parse_config(text, overrides)
        return runner.run(cfg)
    except Exception as exc:  # one-line machine-readable error record
        kind = "config" if isinstance(exc, ConfigError) else type(exc).__name__
        print(json.dumps({"error": kind, "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
