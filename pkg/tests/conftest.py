"""Shared test utilities: analytic band-limited functions and PV sums."""

import numpy as np


class TrigPoly:
    """Random band-limited function with analytic evaluation, so reference
    quadratures share no code with the FFT paths under test."""

    def __init__(self, rng, band, offset=0.0, scale=1.0):
        self.a = scale * rng.standard_normal(band + 1)
        self.b = scale * rng.standard_normal(band + 1)
        self.b[0] = 0.0
        self.a[0] += offset
        self.band = band

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        out = np.full_like(k, self.a[0])
        for n in range(1, self.band + 1):
            out = out + self.a[n] * np.cos(n * k) + self.b[n] * np.sin(n * k)
        return out

    def deriv(self, k):
        k = np.asarray(k, dtype=float)
        out = np.zeros_like(k)
        for n in range(1, self.band + 1):
            out = out + n * (-self.a[n] * np.sin(n * k) + self.b[n] * np.cos(n * k))
        return out

    def exact_mean(self):
        return self.a[0]

    def exact_hilbert(self, k):
        k = np.asarray(k, dtype=float)
        out = np.zeros_like(k)
        for n in range(1, self.band + 1):
            out = out + self.a[n] * np.sin(n * k) - self.b[n] * np.cos(n * k)
        return out


def smooth_occupation(rng, band, lo=0.05, hi=0.95):
    """TrigPoly squeezed into [lo, hi] so it is a valid occupation."""
    poly = TrigPoly(rng, band)
    mid = 0.5 * (lo + hi)
    halfwidth = 0.5 * (hi - lo)
    peak = max(abs(poly.a[0]) + np.abs(poly.a[1:]).sum() + np.abs(poly.b[1:]).sum(), 1e-12)
    scale = halfwidth / peak
    poly.a *= scale
    poly.b *= scale
    poly.a[0] += mid
    return poly


def pv_cot_sum(func, k_nodes, m_fine):
    """Excluded-node PV sum for the cot kernel; k_nodes must lie on the
    fine grid."""
    p = 2.0 * np.pi * np.arange(m_fine) / m_fine
    fp = func(p)
    out = np.empty(np.asarray(k_nodes).size)
    for i, k in enumerate(np.atleast_1d(k_nodes)):
        s = np.sin(0.5 * (k - p))
        singular = np.abs(s) < 1e-13
        kern = np.where(singular, 0.0, np.cos(0.5 * (k - p)) / np.where(singular, 1.0, s))
        out[i] = np.dot(kern, fp) / m_fine
    return out


def pv_deriv_sum(func, k_nodes, m_fine):
    """Excluded-node PV sum for the derivative kernel
    (f(k) - f(p)) / (2 sin^2((k-p)/2))."""
    p = 2.0 * np.pi * np.arange(m_fine) / m_fine
    fp = func(p)
    fk = func(np.atleast_1d(k_nodes))
    out = np.empty(fk.size)
    for i, k in enumerate(np.atleast_1d(k_nodes)):
        s2 = np.sin(0.5 * (k - p)) ** 2
        singular = s2 < 1e-26
        kern = np.where(singular, 0.0, (fk[i] - fp) / np.where(singular, 1.0, s2))
        out[i] = 0.5 * kern.sum() / m_fine
    return out


def richardson(sum_fn, func, k_nodes, m_fine):
    """Two-level extrapolation removing the exactly-linear defect of the
    excluded-node PV sums."""
    s1 = sum_fn(func, k_nodes, m_fine)
    s2 = sum_fn(func, k_nodes, 2 * m_fine)
    return 2.0 * s2 - s1
