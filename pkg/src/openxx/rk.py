"""Embedded Dormand-Prince 5(4) stepper with PI step-size control.

Generic over flat numpy state vectors (real or complex).  Checkpoints are
hit by clipping the step, never by interpolation, so checkpoint values are
genuine solution states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Dormand-Prince tableau; the 5th-order solution propagates, the embedded
# 4th-order one provides the error estimate, and the last stage is FSAL.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_ERR = _B5 - _B4

_ORDER = 5.0
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
# Gustafsson-style PI exponents for the 5(4) pair
_ALPHA = 0.7 / _ORDER
_BETA = 0.4 / _ORDER


class IntegrationError(RuntimeError):
    """Integration aborted; carries the last time reached."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g})")
        self.time = time


@dataclass
class StepStats:
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    dt_final: float = 0.0
    local_error_sum: float = 0.0  # accumulated error-norm estimates


@dataclass
class RKSolution:
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    stats: StepStats = field(default_factory=StepStats)


def integrate_adaptive(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    checkpoints: Sequence[float],
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-12,
    dt_init: float = 1e-4,
    max_steps: int = 5_000_000,
    callback: Callable[[float, np.ndarray], None] | None = None,
) -> RKSolution:
    """Integrate y' = rhs(t, y) to each checkpoint time in order.

    The step is clipped to land exactly on every checkpoint.  Raises
    IntegrationError on non-finite states or step-budget exhaustion.
    """
    checkpoints = list(checkpoints)
    sol = RKSolution()
    if not checkpoints:
        return sol
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    if checkpoints[0] < t0:
        raise ValueError("first checkpoint precedes the initial time")

    t = float(t0)
    y = np.array(y0, copy=True)
    k1 = rhs(t, y)
    sol.stats.n_rhs += 1
    dt = min(dt_init, checkpoints[-1] - t0) if checkpoints[-1] > t0 else dt_init
    err_prev = 1.0
    ks = [k1] + [np.empty_like(y) for _ in range(6)]

    for target in checkpoints:
        if target == t:
            sol.times.append(t)
            sol.states.append(y.copy())
            continue
        while t < target:
            if sol.stats.n_accepted + sol.stats.n_rejected >= max_steps:
                raise IntegrationError("step budget exhausted", t)
            dt_step = min(dt, target - t)
            clipped = dt_step < dt
            landing = dt_step == target - t

            for i in range(1, 7):
                yi = y + dt_step * sum(
                    aij * ks[j] for j, aij in enumerate(_A[i]) if aij != 0.0
                )
                ks[i] = rhs(t + _C[i] * dt_step, yi)
            sol.stats.n_rhs += 6
            y_new = yi  # stage 7 argument equals the 5th-order solution (FSAL)

            err_vec = dt_step * sum(e * ks[j] for j, e in enumerate(_ERR) if e != 0.0)
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))

            if err <= 1.0 or dt_step <= 1e-14 * max(abs(t), 1.0):
                t = target if landing else t + dt_step
                y = y_new
                ks[0] = ks[6]
                sol.stats.n_accepted += 1
                sol.stats.local_error_sum += float(np.max(np.abs(err_vec)))
                if not np.all(np.isfinite(y)):
                    raise IntegrationError("non-finite state", t)
                if callback is not None:
                    callback(t, y)
                fac = _SAFETY * err ** -_ALPHA * err_prev**_BETA if err > 0 else _FAC_MAX
                err_prev = max(err, 1e-10)
            else:
                sol.stats.n_rejected += 1
                fac = _SAFETY * err**-_ALPHA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            if not clipped or err > 1.0:
                dt = dt_step * fac

        sol.times.append(t)
        sol.states.append(y.copy())

    sol.stats.dt_final = dt
    return sol
