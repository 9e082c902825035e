"""Closed-form and asymptotic reference results for the free-fermion model.

These serve as ground truth in tests and for fast generation of exact
density series: modified Bessel evaluations, the closed-form densities for
the all-up and x-polarized initial states, their late-time expansions, and
the real-space correlators of the initial product state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

_SERIES_ASYMPTOTIC_SWITCH = 20.0


def bessel_I(alpha: int, x: float) -> float:
    """Modified Bessel function of the first kind, order 0 or 1.

    Power series for x <= 20, asymptotic expansion
    e^x/sqrt(2 pi x) * (1 - (4 a^2 - 1)/(8x) + ...) beyond; the two
    branches agree to better than 1e-10 relative at the switchover.
    Negative x is rejected; callers use the parity I_a(-x) = (-1)^a I_a(x).
    """
    if alpha not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {alpha}")
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    if x <= _SERIES_ASYMPTOTIC_SWITCH:
        return _bessel_series(alpha, x)
    return math.exp(x) * _bessel_asymptotic_scaled(alpha, x)


def bessel_I_scaled(alpha: int, x: float) -> float:
    """e^{-x} I_alpha(x); overflow-free at large argument."""
    if alpha not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {alpha}")
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    if x <= _SERIES_ASYMPTOTIC_SWITCH:
        return math.exp(-x) * _bessel_series(alpha, x)
    return _bessel_asymptotic_scaled(alpha, x)


def _bessel_series(alpha: int, x: float) -> float:
    # sum_m (x/2)^{2m+a} / (m! (m+a)!); all terms positive, no cancellation
    q = 0.25 * x * x
    term = 1.0 if alpha == 0 else 0.5 * x
    total = term
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + alpha))
        total += term
        if term <= 1e-16 * total:
            return total
        if m > 1000:  # unreachable for x <= 20
            raise RuntimeError("Bessel series failed to converge")


def _bessel_asymptotic_scaled(alpha: int, x: float) -> float:
    # e^{-x} I_a(x) ~ (2 pi x)^{-1/2} sum_n (-1)^n a_n / x^n with
    # a_n = prod_{j<n} (4 a^2 - (2j+1)^2) / (n! 8^n); truncated at the
    # smallest term, which bounds the error of the divergent series
    mu = 4 * alpha * alpha
    term = 1.0
    total = term
    prev = abs(term)
    for n in range(1, 60):
        term *= -(mu - (2 * n - 1) ** 2) / (8.0 * n * x)
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if abs(term) < 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * x)


def ff_density_closed(theta: float, phi: float, kt: float) -> float:
    """Free-fermion density at dimensionless time kt, closed Bessel form.

    Only the all-up (theta = 0) and x-polarized (theta = pi/4) initial
    states admit closed forms:
        theta = 0:     e^{-2kt} I_0(2kt)            (phi-independent)
        theta = pi/4:  e^{-2kt} [I_0(2kt) - cos(phi) I_1(2kt)] / 2
    """
    if kt < 0:
        raise ValueError(f"kt must be nonnegative, got {kt}")
    x = 2.0 * kt
    if abs(theta) < 1e-12:
        return bessel_I_scaled(0, x)
    if abs(theta - math.pi / 4) < 1e-12:
        return 0.5 * (bessel_I_scaled(0, x) - math.cos(phi) * bessel_I_scaled(1, x))
    raise ValueError(
        f"no closed form for theta={theta}; use ff_density_quadrature"
    )


def ff_density_quadrature(
    theta: float, phi: float, kt: float, tol: float = 1e-12
) -> float:
    """Free-fermion density by adaptive quadrature of the momentum integral.

    General-theta oracle: n(kt) = int dk/2pi rho0(k) e^{-2 kt (1+cos(phi+k))}.
    """
    from .dynamics import _initial_rapidity_values  # deferred: avoid cycle

    def integrand(k):
        rho0 = _initial_rapidity_values(theta, np.asarray([k]))[0]
        return rho0 * math.exp(-2.0 * kt * (1.0 + math.cos(phi + k))) / (2.0 * math.pi)

    kstar = (math.pi - phi) % (2.0 * math.pi)
    points = [kstar] if 0.0 < kstar < 2.0 * math.pi else None
    val, _err = integrate.quad(
        integrand, 0.0, 2.0 * math.pi, points=points, epsabs=tol, epsrel=tol, limit=400
    )
    return val


@dataclass(frozen=True)
class AsymptoticDecay:
    """Late-time decay law n ~ amplitude * (kt)^(-chi)."""

    chi: float
    density_estimate: float | None  # two-term expansion where available


def ff_asymptotic(theta: float, phi: float, kt: float) -> AsymptoticDecay:
    """Late-time exponent and, for theta in {0, pi/4}, the two-term density.

    chi = 3/2 exactly when phi = 0 with theta in (0, pi/2); otherwise the
    generic saddle point gives chi = 1/2.  Valid for kt >> 1 (enforced
    kt >= 10).
    """
    if kt < 10:
        raise ValueError(f"asymptotic form requires kt >= 10, got {kt}")
    reciprocal = abs(phi) < 1e-12
    polarized = theta > 1e-12
    chi = 1.5 if (reciprocal and polarized) else 0.5
    estimate = None
    if abs(theta) < 1e-12:
        estimate = (1.0 + 1.0 / (16.0 * kt)) / (2.0 * math.sqrt(math.pi * kt))
    elif abs(theta - math.pi / 4) < 1e-12:
        c = math.cos(phi)
        estimate = (1.0 - c + (1.0 + 3.0 * c) / (16.0 * kt)) / (
            4.0 * math.sqrt(math.pi * kt)
        )
    return AsymptoticDecay(chi=chi, density_estimate=estimate)


def initial_corr(theta: float, separation: int) -> float:
    """Real-space correlator <c_j^dag c_l> of the initial product state.

    Depends only on |j - l|: cos^2(theta) on the diagonal, and
    cos^2 sin^2 (sin^2 - cos^2)^{|j-l|-1} off it.
    """
    m = abs(int(separation))
    c2 = math.cos(theta) ** 2
    if m == 0:
        return c2
    s2 = math.sin(theta) ** 2
    return c2 * s2 * (s2 - c2) ** (m - 1)
