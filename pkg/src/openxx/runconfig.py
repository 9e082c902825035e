"""Run configuration: key = value files, CLI overrides, validation.

The config format is line-oriented `key = value` with `#` comments.
Unknown keys are hard errors: a silent typo in a physics parameter would
produce plausible wrong numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import IntegratorConfig, ModelParams

MODES = ("tgge", "free-fermion", "trajectories", "dense-lindblad", "fit", "compare")

_RAPIDITY_MODES = ("tgge", "free-fermion", "compare")
_BENCH_MODES = ("trajectories", "dense-lindblad", "compare")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


# key -> (type, default); None default means "required by some mode"
_SCHEMA: dict[str, tuple[type, object]] = {
    "mode": (str, None),
    "J": (float, 1.0),
    "kappa": (float, None),
    "phi": (float, None),
    "theta": (float, None),
    "M": (int, 4096),
    "rel_tol": (float, 1e-8),
    "abs_tol": (float, 1e-12),
    "dt_init": (float, 1e-4),
    "max_steps": (int, 5_000_000),
    "checkpoints": (str, "log:1e-2:1e4:400"),
    "snapshots": (str, ""),
    "L": (int, 12),
    "n_traj": (int, 1000),
    "seed": (int, 1),
    "norm_tol": (float, 1e-8),
    "propagator": (str, "exact"),
    "out": (str, "."),
    "format": (str, "csv"),
    "fit_window_lo": (float, 50.0),
    "fit_window_hi": (float, 1e4),
    "gauss_hint": (float, float("nan")),  # default: pi - phi
    "run_dir": (str, ""),
    "delta_tol": (float, 0.05),
    "figures": (bool, True),
}


@dataclass
class RunConfig:
    """Validated configuration for one run."""

    mode: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def params(self) -> ModelParams:
        return ModelParams(
            kappa=self.values["kappa"],
            phi=self.values["phi"],
            theta=self.values["theta"],
            J=self.values["J"],
        )

    def integrator(self) -> IntegratorConfig:
        kappa = self.values["kappa"]
        return IntegratorConfig(
            checkpoints=tuple(kt / kappa for kt in self.values["checkpoints"]),
            rel_tol=self.values["rel_tol"],
            abs_tol=self.values["abs_tol"],
            dt_init=self.values["dt_init"],
            max_steps=self.values["max_steps"],
        )


def _parse_value(key: str, raw: str):
    typ, _default = _SCHEMA[key]
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            val = int(raw, 0)
        elif typ is float:
            val = float(raw)
        else:
            val = raw
    except ValueError:
        raise ConfigError(f"key '{key}': cannot parse {raw!r} as {typ.__name__}") from None
    return val


def parse_checkpoint_spec(spec: str) -> tuple[float, ...]:
    """Checkpoint kt values: 'log:t0:t1:count' or a comma-separated list."""
    spec = spec.strip()
    if not spec:
        return ()
    if spec.startswith("log:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise ConfigError(f"checkpoint spec {spec!r}: expected log:t0:t1:count")
        try:
            t0, t1, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError(f"checkpoint spec {spec!r}: bad number") from None
        if not (0 < t0 < t1) or count < 2:
            raise ConfigError(
                f"checkpoint spec {spec!r}: need 0 < t0 < t1 and count >= 2"
            )
        return tuple(float(x) for x in np.geomspace(t0, t1, count))
    try:
        values = tuple(float(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"checkpoint spec {spec!r}: bad number") from None
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"checkpoint spec {spec!r}: values must increase")
    return values


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse a config file body, apply CLI overrides, validate everything.

    Raises ConfigError naming the offending key and constraint.
    """
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        raw[key] = _parse_value(key, value)

    for key, value in (overrides or {}).items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key '{key}'")
        raw[key] = _parse_value(key, str(value)) if isinstance(value, str) else value

    if "mode" not in raw:
        raise ConfigError("missing required key 'mode'")
    mode = raw["mode"]
    if mode not in MODES:
        raise ConfigError(f"key 'mode': {mode!r} is not one of {MODES}")

    values: dict[str, object] = {}
    for key, (_typ, default) in _SCHEMA.items():
        values[key] = raw.get(key, default)

    if mode == "fit":
        if not values["run_dir"]:
            raise ConfigError("mode 'fit' requires key 'run_dir'")
    else:
        for key in ("kappa", "phi", "theta"):
            if values[key] is None:
                raise ConfigError(f"missing required key '{key}'")
        _validate_physics(values)

    if mode in _RAPIDITY_MODES:
        m = values["M"]
        if m < 8 or m & (m - 1):
            raise ConfigError(f"key 'M': must be a power of two >= 8, got {m}")
    if mode in _BENCH_MODES:
        if not (4 <= values["L"] <= 14):
            raise ConfigError(f"key 'L': must be in [4, 14], got {values['L']}")
        if values["n_traj"] < 1:
            raise ConfigError(f"key 'n_traj': must be >= 1, got {values['n_traj']}")
        if values["propagator"] not in ("exact", "substep"):
            raise ConfigError(
                f"key 'propagator': {values['propagator']!r} not in ('exact', 'substep')"
            )
    if mode == "dense-lindblad" and values["L"] > 6:
        raise ConfigError(
            f"key 'L': dense-lindblad mode is limited to L <= 6, got {values['L']}"
        )
    if values["format"] not in ("csv", "json-lines"):
        raise ConfigError(
            f"key 'format': {values['format']!r} not in ('csv', 'json-lines')"
        )

    values["checkpoints"] = parse_checkpoint_spec(values["checkpoints"])
    values["snapshots"] = parse_checkpoint_spec(values["snapshots"])
    return RunConfig(mode=mode, values=values)


def _validate_physics(values: dict):
    if not values["kappa"] > 0:
        raise ConfigError(f"key 'kappa': must be positive, got {values['kappa']}")
    if not (-math.pi < values["phi"] <= math.pi):
        raise ConfigError(f"key 'phi': must lie in (-pi, pi], got {values['phi']}")
    if not (0.0 <= values["theta"] < math.pi / 2):
        raise ConfigError(
            f"key 'theta': must lie in [0, pi/2), got {values['theta']}"
        )


def config_as_dict(cfg: RunConfig) -> dict:
    """JSON-ready copy of the resolved configuration."""
    out = {}
    for key, value in sorted(cfg.values.items()):
        if isinstance(value, tuple):
            out[key] = list(value)
        elif isinstance(value, float) and math.isnan(value):
            out[key] = None
        else:
            out[key] = value
    out["mode"] = cfg.mode
    return out
