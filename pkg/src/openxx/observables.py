"""Physical observables and fits built on rapidity states and time series.

Density, Hamiltonian current and energy density are momentum averages of
the rapidity distribution; the decay diagnostics are logarithmic
derivatives of n(kt) and least-squares exponent fits in log-log
coordinates; the late-time peak of rho(k) is characterized by a Gaussian
fit in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .dynamics import ModelParams, RapidityState

DENOM_FLOOR = 1e-14  # below this a ratio is emitted as a missing value


class FitError(ValueError):
    """A fit could not be performed on the given data."""


class FitRejectedError(FitError):
    """The data does not look like the assumed model; carries diagnostics."""


def density(state: RapidityState) -> float:
    """Fermion (up-spin) density per site, n = mean_k rho(k)."""
    return float(np.mean(state.rho))


def current(state: RapidityState, J: float = 1.0) -> float:
    """Hamiltonian magnetization current density, J * mean(sin(k) rho)."""
    return J * float(np.mean(np.sin(state.grid.nodes) * state.rho))


def energy_density(state: RapidityState, J: float = 1.0) -> float:
    """Energy density, -J * mean(cos(k) rho)."""
    return -J * float(np.mean(np.cos(state.grid.nodes) * state.rho))


@dataclass
class ObservableSeries:
    """Time series of observables on the dimensionless clock kt.

    `current` and `energy` are stored in units of J.
    """

    times: NDArray[np.float64]
    n: NDArray[np.float64]
    current: NDArray[np.float64]
    energy: NDArray[np.float64]
    provenance: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.n = np.asarray(self.n, dtype=float)
        self.current = np.asarray(self.current, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        m = self.times.size
        if not (self.n.size == self.current.size == self.energy.size == m):
            raise ValueError("series arrays must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times.size

    @classmethod
    def from_states(
        cls, states, params: ModelParams, provenance: str = ""
    ) -> "ObservableSeries":
        """Evaluate n, current/J, energy/J at each state; times become kt."""
        kt = np.array([params.kappa * s.time for s in states])
        return cls(
            times=kt,
            n=np.array([density(s) for s in states]),
            current=np.array([current(s, 1.0) for s in states]),
            energy=np.array([energy_density(s, 1.0) for s in states]),
            provenance=provenance,
        )


@dataclass
class LogDerivatives:
    """D1 = -d log n / d log kt and D2 = its second derivative, with a mask
    marking the one-sided endpoint stencils."""

    d1: NDArray[np.float64]
    d2: NDArray[np.float64]
    endpoint: NDArray[np.bool_]


def log_derivatives(series: ObservableSeries) -> LogDerivatives:
    """First and second logarithmic derivatives of n with respect to log kt.

    Derivatives are taken per decade (base-10 logs on both axes, matching
    log-log plot coordinates); D1 is base-independent, D2 carries units of
    decade^-2.  Three-point stencils on the (log kt, log n) samples, exact
    for quadratics on non-uniform abscissae; the first and last points use
    one-sided stencils and are flagged.
    """
    if len(series) < 5:
        raise FitError(f"need at least 5 points, got {len(series)}")
    if np.any(series.n <= 0):
        raise FitError("log derivatives require strictly positive n")
    if np.any(series.times <= 0):
        raise FitError("log derivatives require strictly positive kt")
    x = np.log10(series.times)
    y = np.log10(series.n)
    m = x.size
    dy = np.empty(m)
    d2y = np.empty(m)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    dy[1:-1] = (
        -h2 / (h1 * (h1 + h2)) * y[:-2]
        + (h2 - h1) / (h1 * h2) * y[1:-1]
        + h1 / (h2 * (h1 + h2)) * y[2:]
    )
    d2y[1:-1] = 2.0 * (
        y[:-2] / (h1 * (h1 + h2)) - y[1:-1] / (h1 * h2) + y[2:] / (h2 * (h1 + h2))
    )
    for i, (a, b, c) in ((0, (0, 1, 2)), (m - 1, (m - 3, m - 2, m - 1))):
        ha, hb = x[b] - x[a], x[c] - x[b]
        # quadratic through the three boundary points, evaluated at x[i]
        d = x[i]
        dy[i] = (
            y[a] * (2 * d - x[b] - x[c]) / ((x[a] - x[b]) * (x[a] - x[c]))
            + y[b] * (2 * d - x[a] - x[c]) / ((x[b] - x[a]) * (x[b] - x[c]))
            + y[c] * (2 * d - x[a] - x[b]) / ((x[c] - x[a]) * (x[c] - x[b]))
        )
        d2y[i] = 2.0 * (
            y[a] / (ha * (ha + hb)) - y[b] / (ha * hb) + y[c] / (hb * (ha + hb))
        )
    endpoint = np.zeros(m, dtype=bool)
    endpoint[0] = endpoint[-1] = True
    return LogDerivatives(d1=-dy, d2=d2y, endpoint=endpoint)


@dataclass(frozen=True)
class PowerLawFit:
    """Result of a log-log least-squares exponent fit, n ~ kt^(-chi)."""

    chi: float
    stderr: float
    n_points: int
    window: tuple[float, float]


def fit_power_law(series: ObservableSeries, window: tuple[float, float]) -> PowerLawFit:
    """Least-squares slope of log n versus log kt inside [t_lo, t_hi].

    Returns the decay exponent chi = -slope and its standard error.
    Requires at least 10 points inside the window.
    """
    t_lo, t_hi = window
    sel = (series.times >= t_lo) & (series.times <= t_hi)
    m = int(np.count_nonzero(sel))
    if m < 10:
        raise FitError(f"only {m} points inside window [{t_lo}, {t_hi}]; need >= 10")
    if np.any(series.n[sel] <= 0):
        raise FitError("power-law fit requires strictly positive n in the window")
    x = np.log(series.times[sel])
    y = np.log(series.n[sel])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y)) / sxx
    resid = y - (y.mean() + slope * xc)
    var = float(np.dot(resid, resid)) / (m - 2) / sxx if m > 2 else 0.0
    return PowerLawFit(
        chi=-slope, stderr=math.sqrt(var), n_points=m, window=(t_lo, t_hi)
    )


@dataclass(frozen=True)
class GaussianPeakFit:
    """Gaussian model A * exp(-(k - center)^2 / (2 sigma^2)) of a rho peak."""

    amplitude: float
    sigma: float
    center: float
    residual: float


def fit_gaussian_peak(state: RapidityState, k_center_hint: float) -> GaussianPeakFit:
    """Weighted least squares of log rho against a quadratic in (k - k*).

    The fit uses nodes with rho >= 1e-3 * max(rho) (the Gaussian is a
    local model near the peak; far tails would bias it), weighted by rho.
    The peak must be a unique maximum within pi/4 of the hint and stand
    at least 10x above the median occupation.
    """
    rho = state.rho
    k = state.grid.nodes
    offset = _wrap_angle(k - k_center_hint)
    near = np.abs(offset) <= np.pi / 4
    if not np.any(near):
        raise FitRejectedError("no grid nodes within pi/4 of the hint")
    sub = np.where(near)[0]
    i_max = sub[np.argmax(rho[sub])]
    peak = rho[i_max]
    med = float(np.median(rho))
    if peak <= 10.0 * med:
        raise FitRejectedError(
            f"no clear peak: max rho {peak:.3g} vs median {med:.3g}"
        )
    if np.count_nonzero(rho[sub] == peak) > 1:
        raise FitRejectedError("peak maximum is not unique within the hint window")

    window = rho >= 1e-3 * peak
    delta = _wrap_angle(k - k[i_max])
    window &= np.abs(delta) <= np.pi / 2  # stay on the peak's own flank
    d = delta[window]
    ylog = np.log(rho[window])
    w = rho[window]
    # weighted quadratic fit ylog = a + b d + c d^2
    design = np.stack([np.ones_like(d), d, d * d], axis=1)
    wd = design * w[:, None]
    coef, *_ = np.linalg.lstsq(wd, ylog * w, rcond=None)
    a, b, c = coef
    if c >= 0:
        raise FitRejectedError(f"fit is not concave (quadratic coefficient {c:.3g})")
    sigma = math.sqrt(-0.5 / c)
    d0 = -b / (2.0 * c)
    amp = math.exp(a - c * d0 * d0)
    resid = float(np.sqrt(np.mean((design @ coef - ylog) ** 2)))
    return GaussianPeakFit(
        amplitude=amp,
        sigma=sigma,
        center=float((k[i_max] + d0) % (2.0 * np.pi)),
        residual=resid,
    )


def _wrap_angle(x):
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass
class RatioSeries:
    """Elementwise observable ratios; entries are NaN where the
    denominator magnitude falls below DENOM_FLOOR."""

    times: NDArray[np.float64]
    current_over_jn: NDArray[np.float64]
    energy_over_jn: NDArray[np.float64]
    current_over_energy: NDArray[np.float64]


def ratio_series(series: ObservableSeries) -> RatioSeries:
    """Per-time ratios J/(J n), eps/(J n) and J/eps with guarded division."""
    def guarded(num, den):
        out = np.full_like(num, np.nan)
        ok = np.abs(den) >= DENOM_FLOOR
        out[ok] = num[ok] / den[ok]
        return out

    return RatioSeries(
        times=series.times.copy(),
        current_over_jn=guarded(series.current, series.n),
        energy_over_jn=guarded(series.energy, series.n),
        current_over_energy=guarded(series.current, series.energy),
    )
