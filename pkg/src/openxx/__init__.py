"""Dissipative dynamics of a non-reciprocal open XX spin chain.

Spectral solver for the rapidity-distribution equation of motion in the
slow-dissipation (generalized Gibbs ensemble) regime, exact free-fermion
references, finite-chain quantum-trajectory and Lindblad benchmarks, and
an observables/fitting layer for magnetization decay and current dynamics.
"""

__version__ = "0.1.0"

from .spectral import FourierGrid, PeriodicFunction, hilbert, hilbert_deriv, mean
from .dynamics import (
    IntegratorConfig,
    ModelParams,
    RapidityState,
    evolve,
    free_fermion_exact,
    free_fermion_rhs,
    initial_rapidity,
    tgge_rhs,
)
from .observables import (
    GaussianPeakFit,
    ObservableSeries,
    current,
    density,
    energy_density,
    fit_gaussian_peak,
    fit_power_law,
    log_derivatives,
    ratio_series,
)

__all__ = [
    "FourierGrid",
    "PeriodicFunction",
    "hilbert",
    "hilbert_deriv",
    "mean",
    "ModelParams",
    "RapidityState",
    "IntegratorConfig",
    "initial_rapidity",
    "tgge_rhs",
    "free_fermion_rhs",
    "free_fermion_exact",
    "evolve",
    "ObservableSeries",
    "GaussianPeakFit",
    "density",
    "current",
    "energy_density",
    "log_derivatives",
    "fit_power_law",
    "fit_gaussian_peak",
    "ratio_series",
]
