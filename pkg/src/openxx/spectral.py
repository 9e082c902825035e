"""Periodic momentum grid and FFT-based circular Hilbert transforms.

Functions on the momentum interval [0, 2pi) are sampled on a uniform grid
of M points (M a power of two).  On such a grid the periodic trapezoid
rule reduces to the sample mean and is spectrally accurate, and the
circular Hilbert transform and its derivative are diagonal in Fourier
space with multipliers -i*sgn(n) and |n| respectively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import fft as _fft


class SpectralError(ValueError):
    """Invalid grid or sample data."""


@dataclass(frozen=True)
class FourierGrid:
    """Uniform discretization of [0, 2pi) with FFT index bookkeeping.

    Attributes:
        M: number of grid points; must be a power of two, at least 8.
        nodes: k_m = 2*pi*m/M for m = 0..M-1.
        dk: grid spacing 2*pi/M.
    """

    M: int
    nodes: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    dk: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.M < 8 or (self.M & (self.M - 1)) != 0:
            raise SpectralError(f"grid size must be a power of two >= 8, got {self.M}")
        object.__setattr__(self, "dk", 2.0 * np.pi / self.M)
        nodes = np.arange(self.M) * self.dk
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    def __repr__(self) -> str:
        return f"FourierGrid(M={self.M})"


@dataclass(frozen=True)
class PeriodicFunction:
    """Real samples f(k_m) of a 2pi-periodic function on a FourierGrid."""

    grid: FourierGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.M,):
            raise SpectralError(
                f"expected {self.grid.M} samples, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise SpectralError("samples must be finite")
        object.__setattr__(self, "values", vals)

    def coefficients(self) -> NDArray[np.complex128]:
        """Fourier coefficients f_hat[n] for n = 0..M/2, normalized so
        that f_hat[0] is the mean of f."""
        return _fft.rfft(self.values) / self.grid.M

    def interp(self, k: NDArray[np.float64] | float) -> NDArray[np.float64] | float:
        """Evaluate the band-limited interpolant at arbitrary momenta."""
        k = np.asarray(k, dtype=float)
        scalar = k.ndim == 0
        coef = self.coefficients()
        n = np.arange(coef.size)
        # one-sided sum; interior modes count twice, the Nyquist mode once
        weight = np.full(coef.size, 2.0)
        weight[0] = 1.0
        weight[-1] = 1.0
        out = np.exp(1j * np.outer(np.atleast_1d(k), n)) @ (weight * coef)
        return float(out[0].real) if scalar else out.real


def mean(f: PeriodicFunction) -> float:
    """Integral (1/2pi) * int_0^{2pi} f(k) dk as the sample mean.

    The periodic trapezoid rule on a uniform grid; exact for band-limited f.
    """
    return float(np.mean(f.values))


def hilbert(f: PeriodicFunction) -> PeriodicFunction:
    """Circular Hilbert transform, PV convolution with cot((k-p)/2)/(2pi).

    Fourier multiplier -i*sgn(n), with the n = 0 and Nyquist modes mapped
    to zero so that real input yields real output.
    """
    return PeriodicFunction(f.grid, _hilbert(f.values))


def hilbert_deriv(f: PeriodicFunction) -> PeriodicFunction:
    """Derivative of the circular Hilbert transform.

    Equals (1/2) PV int dp/(2pi) (f(k) - f(p)) / sin^2((k-p)/2); Fourier
    multiplier |n| (the Nyquist mode keeps |n| = M/2).
    """
    return PeriodicFunction(f.grid, _hilbert_deriv(f.values))


def _hilbert(values: NDArray[np.float64]) -> NDArray[np.float64]:
    m = values.shape[-1]
    fh = _fft.rfft(values)
    fh *= -1j
    fh[..., 0] = 0.0
    fh[..., -1] = 0.0  # Nyquist killed: preserves realness
    return _fft.irfft(fh, n=m)


def _hilbert_deriv(values: NDArray[np.float64]) -> NDArray[np.float64]:
    m = values.shape[-1]
    fh = _fft.rfft(values)
    fh *= np.arange(m // 2 + 1)
    return _fft.irfft(fh, n=m)
