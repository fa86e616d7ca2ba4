"""Hydrodynamic density profile of eta^1 and its empirical counterpart.

Under Euler scaling the density u(xi, theta) of eta^1 solves the Burgers
equation u_theta + ((p-q) u (1-u))_xi = 0 from the datum 1 on (-inf, -(p-q)),
0 on (-(p-q), 0), 1 on (0, p-q), 0 beyond. Each particle|hole step opens a
rarefaction fan of half-width (p-q) theta, so at theta = 1 the two fans meet the
shock at the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d


def burgers_profile(xi, p: float, theta: float = 1.0, centre: float | None = None):
    """Entropy solution u(xi, theta) for theta in (0, 1].

    ``centre`` moves the two initial steps from -+(p-q) to -+centre (centre <= p-q),
    e.g. centre = N/t to account for the finite-t block length.
    """
    if not 0 < theta <= 1:
        raise ValueError("closed form holds for 0 < theta <= 1")
    g = 2 * p - 1
    c = g if centre is None else centre
    xi = np.asarray(xi, dtype=float)
    # fans centred at -c (particles|holes) and at +c
    left = np.clip(0.5 * (1 - (xi + c) / (g * theta)), 0.0, 1.0)
    right = np.clip(0.5 * (1 - (xi - c) / (g * theta)), 0.0, 1.0)
    return np.where(xi < 0, left, right)


def godunov(p: float, theta: float = 1.0, dx: float = 5e-4, half_width: float = 3.0,
            cfl: float = 0.4) -> tuple[np.ndarray, np.ndarray]:
    """First-order finite-volume solution of the same Riemann data (for cross-checks)."""
    g = 2 * p - 1
    x = np.arange(-half_width, half_width + dx / 2, dx)
    u = ((x < -g) | ((x >= 0) & (x < g))).astype(float)

    def f(v):
        return g * v * (1 - v)

    def flux(ul, ur):
        # exact Riemann flux for the concave flux with maximum at 1/2
        lo = np.minimum(f(ul), f(ur))
        hi = np.where((ul > 0.5) & (ur < 0.5), g / 4, np.maximum(f(ul), f(ur)))
        return np.where(ul <= ur, lo, hi)

    t, dt = 0.0, cfl * dx / g
    while t < theta - 1e-12:
        h = min(dt, theta - t)
        F = flux(u[:-1], u[1:])
        u[1:-1] -= h / dx * (F[1:] - F[:-1])
        t += h
    return x, u


@dataclass(frozen=True)
class DensityEstimate:
    xi: np.ndarray        # site / t
    density: np.ndarray   # kernel-smoothed replica mean
    raw: np.ndarray       # replica mean per site
    replicas: int
    bandwidth: float      # Gaussian kernel width in sites


def smoothed_density(rows: np.ndarray, lo: int, t: float, bandwidth: float) -> DensityEstimate:
    """Replica-averaged occupation per site, convolved with a Gaussian of ``bandwidth`` sites."""
    rows = np.asarray(rows, dtype=float)
    raw = rows.mean(axis=0)
    sm = gaussian_filter1d(raw, bandwidth, mode="nearest")
    xi = (lo + np.arange(raw.size)) / t
    return DensityEstimate(xi, sm, raw, rows.shape[0], bandwidth)


def l1_distance(est: DensityEstimate, p: float, span: float = 1.2, profile=None) -> float:
    """Integral of |u_emp - u| d(xi) over |xi| <= span (p-q) (Riemann sum, one site = 1/t)."""
    g = 2 * p - 1
    prof = burgers_profile if profile is None else profile
    m = np.abs(est.xi) <= span * g
    dxi = est.xi[1] - est.xi[0]
    return float(np.sum(np.abs(est.density[m] - prof(est.xi[m], p))) * dxi)


def default_bandwidth(t: float) -> float:
    return max(2.0, math.sqrt(t) / 2)
