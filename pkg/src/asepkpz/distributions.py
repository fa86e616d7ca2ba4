"""Distribution functions: F_GUE, F_{M,p}, F_{M,1} and p(xi).

F_{M,p} uses an exact spectral form of the Gaussian kernel. With
rho = q/p and a = sqrt((p - q)/2), Mehler's formula gives

    K-hat(z, z') = sum_n rho^n phi_n(z) phi_n(z'),   phi_n(z) = sqrt(a) psi_n(a z),

psi_n the Hermite functions. Restricting to (-s, inf) turns det(I - lam K)
into det(I - lam D G) with D = diag(rho^n) and G the Gram matrix of the phi_n
on (-s, inf). Rows with |lam rho^n| > 1 are rescaled by -1/(lam rho^n) and
their factors pulled out, which keeps the determinant well conditioned for
the large lam (up to (p/q)^{M-1}) the definition needs. The Nyström route in
:mod:`asepkpz.fredholm` evaluates the same determinants independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .fredholm import (ConvergenceError, KernelSpec, fredholm_det_adaptive, gauss_legendre,
                       nystrom_matrix)

M_MAX = 12
BASIS_CAP = 900
CONTOUR_TOL = 1e-9


@dataclass(frozen=True)
class DistributionTable:
    grid: np.ndarray
    values: np.ndarray
    method: str
    error_estimate: float
    approximate: bool = False

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.ndim != 1:
            raise ValueError("grid and values must be 1-d of equal length")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be increasing")
        tol = self.error_estimate + 1e-15
        if np.any(v < -tol) or np.any(v > 1 + tol) or np.any(np.diff(v) < -2 * tol):
            raise ValueError("table values must be a CDF up to the error estimate")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)


# ---------------------------------------------------------------- F_GUE

def F_GUE(s: float, tol: float = 1e-12) -> float:
    """Tracy-Widom GUE distribution function on [-10, 10]."""
    return F_GUE_with_error(s, tol)[0]


def F_GUE_with_error(s: float, tol: float = 1e-12) -> tuple[float, float]:
    if not -10.0 <= s <= 10.0:
        raise ValueError("F_GUE is evaluated on [-10, 10]")
    v, err, _ = fredholm_det_adaptive(KernelSpec("airy", s=float(s)), 1.0, tol=tol)
    return min(max(v, 0.0), 1.0), err


@lru_cache(maxsize=4)
def gue_table(lo: float = -10.0, hi: float = 10.0, h: float = 0.02) -> DistributionTable:
    grid = np.round(np.arange(lo, hi + 0.5 * h, h), 10)
    vals = np.empty_like(grid)
    err = 0.0
    for i, s in enumerate(grid):
        vals[i], e = F_GUE_with_error(float(s))
        err = max(err, e)
    return DistributionTable(grid, vals, "nystrom-airy", err)


# ---------------------------------------------------------------- F_{M,p}

def _hermite_functions(x: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def basis_size(p: float, lam_max: float) -> int:
    rho = (1 - p) / p
    n = int(math.ceil((math.log(1e-18) - math.log(max(1.0, lam_max))) / math.log(rho))) + 4
    if n > BASIS_CAP:
        raise ValueError(f"p={p} needs {n} basis functions (cap {BASIS_CAP}); p too close to 1/2")
    return max(n, 8)


@lru_cache(maxsize=256)
def _gram(p: float, s: float, n: int, quad_factor: int = 2) -> np.ndarray:
    """Gram matrix of phi_0..phi_{n-1} on (-s, inf), in the psi variable x = a z."""
    a = math.sqrt((2 * p - 1) / 2)
    top = math.sqrt(2 * n + 1) + 14.0
    lo = max(-a * s, -top)
    if lo >= top:
        return np.zeros((n, n))
    nq = quad_factor * n + 200
    x, w = gauss_legendre(nq, lo, top)
    psi = _hermite_functions(x, n)
    return (psi * w[None, :]) @ psi.T


def _graded_logdet(lam: complex, rho_pow: np.ndarray, G: np.ndarray) -> complex:
    """log det(I - lam diag(rho_pow) G), big rows factored out."""
    scale = lam * rho_pow
    big = np.abs(scale) > 1.0
    E = np.eye(G.shape[0], dtype=complex) - scale[:, None] * G
    idx = np.flatnonzero(big)
    E[idx] = G[idx] - np.eye(G.shape[0])[idx] / scale[idx, None]
    sign, logabs = np.linalg.slogdet(E)
    return np.log(sign) + logabs + np.sum(np.log(-scale[idx].astype(complex)))


@dataclass(frozen=True)
class FmpResult:
    value: float
    error: float
    method: str
    nodes: int = 0


def _check_args(M, p):
    if M < 0:
        raise ValueError("M must be nonnegative")
    if M > M_MAX:
        raise ValueError(f"M={M} exceeds M_max={M_MAX}; use the hybrid approximation")
    if not 0.5 < p < 1.0:
        raise ValueError("F_Mp needs p in (1/2, 1)")


def _contour(M, p, s, quad_factor=2):
    rho = (1 - p) / p
    r = 2.0 * rho ** (-(M - 1))
    n = basis_size(p, r)
    G = _gram(p, float(s), n, quad_factor)
    rho_pow = rho ** np.arange(n)
    poles = rho ** np.arange(M)

    def g(lam):
        return np.exp(_graded_logdet(lam, rho_pow, G) - np.sum(np.log(1 - lam * poles)))

    def mean_on(m):
        th = 2 * math.pi * (np.arange(m) + 0.5) / m
        return np.mean([g(r * complex(math.cos(t), math.sin(t))) for t in th])

    m = 16
    prev = mean_on(m)
    while m < 4096:
        m *= 2
        cur = mean_on(m)
        if abs(cur - prev) < CONTOUR_TOL:
            return float(cur.real), float(abs(cur - prev)) + abs(cur.imag), m
        prev = cur
    raise ConvergenceError("contour trapezoid did not converge", (prev, cur))


def _residue(M, p, s, quad_factor=2):
    rho = (1 - p) / p
    n = basis_size(p, rho ** (-(M - 1)))
    G = _gram(p, float(s), n, quad_factor)
    rho_pow = rho ** np.arange(n)
    total = 0.0
    for k in range(M):
        lam = rho ** (-k)
        # det(I - lam K) / prod_{j != k} (1 - rho^{j-k}); j < k factors cancel the pulled-out rows
        logd = _graded_logdet(lam, rho_pow, G)
        log_big = np.sum(np.log(-(lam * rho_pow[:k]).astype(complex)))
        j = np.arange(M)
        below = -np.sum(np.log(1 - rho ** (k - j[:k]).astype(float))) if k else 0.0
        above = -np.sum(np.log(1 - rho ** (j[k + 1:] - k).astype(float)))
        # prod_{j<k} (1 - rho^{j-k}) = prod_{j<k} (-rho^{j-k}) (1 - rho^{k-j})
        total += np.exp(logd - log_big + below + above).real
    return 1.0 - total


def F_Mp_detail(M: int, p: float, s: float, method: str = "contour") -> FmpResult:
    _check_args(M, p)
    if M == 0:
        return FmpResult(1.0, 0.0, method)
    if method == "contour":
        v, err, nodes = _contour(M, p, s)
        v2, _, _ = _contour(M, p, s, quad_factor=3)
        return FmpResult(v, err + abs(v2 - v) + 1e-13, method, nodes)
    if method == "residue":
        v = _residue(M, p, s)
        v2 = _residue(M, p, s, quad_factor=3)
        return FmpResult(v, abs(v2 - v) + 1e-13 * M, method)
    raise ValueError(f"unknown method {method!r}")


def F_Mp(M: int, p: float, s: float, method: str = "contour") -> float:
    """F_{M,p}(s) for 0 <= M <= M_MAX and p in (1/2, 1)."""
    return F_Mp_detail(M, p, s, method).value


def F_Mp_nystrom(M: int, p: float, s: float, nodes: int = 96) -> float:
    """Residue formula with Nyström determinants; an independent check for small M."""
    _check_args(M, p)
    if M == 0:
        return 1.0
    rho = (1 - p) / p
    lam_max = rho ** (-(M - 1))
    spec = KernelSpec("gaussian-hat", s=float(s), p=p, lam_max=lam_max)
    A = nystrom_matrix(spec, nodes)
    total = 0.0
    for k in range(M):
        lam = rho ** (-k)
        sign, logabs = np.linalg.slogdet(np.eye(nodes) - lam * A)
        denom = np.prod([1 - rho ** (j - k) for j in range(M) if j != k])
        total += sign * math.exp(logabs) / denom
    return 1.0 - total


def F_hybrid(L: int, M: float) -> float:
    """GUE approximation of F_{L,p}(C(M)) for large L."""
    x = 2 * (math.sqrt(M) - math.sqrt(L)) * L ** (1 / 6)
    return F_GUE(float(np.clip(x, -10, 10)))


def F_LC(L: int, M: int, p: float) -> tuple[float, bool]:
    """F_{L,p}(C(M)) and whether the hybrid approximation was used."""
    if L <= 0:
        return 1.0, False
    if L > M_MAX:
        return F_hybrid(L, M), True
    return F_Mp(L, p, C_of_M(M, p)), False


def C_of_M(M: float, p: float) -> float:
    return 2.0 * math.sqrt(M / (2 * p - 1))


# ---------------------------------------------------------------- F_{M,1}

@dataclass(frozen=True)
class CylinderEstimate:
    estimate: float
    stderr: float
    n: int

    @classmethod
    def from_indicators(cls, hits) -> "CylinderEstimate":
        hits = np.asarray(hits, dtype=float)
        n = hits.size
        est = float(hits.mean()) if n else 0.0
        return cls(est, math.sqrt(est * (1 - est) / n) if n else 0.0, n)

    @classmethod
    def from_counts(cls, k: int, n: int) -> "CylinderEstimate":
        est = k / n if n else 0.0
        return cls(est, math.sqrt(est * (1 - est) / n) if n else 0.0, n)


def last_passage(B: np.ndarray) -> np.ndarray:
    """sup over 0 = t_0 <= ... <= t_M = 1 of sum_i [B_i(t_{i+1}) - B_i(t_i)] on the grid.

    ``B`` has shape (paths, M, grid + 1) with B[..., 0] = 0.
    """
    V = B[:, 0, :] - B[:, 0, :1]
    for i in range(1, B.shape[1]):
        Bi = B[:, i, :]
        V = np.maximum.accumulate(V - Bi, axis=1) + Bi
    return V[:, -1]


def brownian_paths(rng: np.random.Generator, paths: int, M: int, grid: int) -> np.ndarray:
    inc = rng.standard_normal((paths, M, grid)) * math.sqrt(1.0 / grid)
    B = np.zeros((paths, M, grid + 1))
    np.cumsum(inc, axis=2, out=B[:, :, 1:])
    return B


def F_M1_mc(M: int, s: float, paths: int = 10000, grid: int = 4096, seed: int = 0,
            batch: int = 256) -> CylinderEstimate:
    """Monte Carlo estimate of F_{M,1}(s) from Brownian last passage on a grid."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < paths:
        b = min(batch, paths - done)
        hits += int(np.sum(last_passage(brownian_paths(rng, b, M, grid)) <= s))
        done += b
    return CylinderEstimate.from_counts(hits, paths)


# ---------------------------------------------------------------- p(xi)

@lru_cache(maxsize=2)
def _pxi_parts(h: float = 0.02):
    tab = gue_table(-10.0, 10.0, h)
    F = tab.values
    dens = np.zeros_like(F)
    dens[1:-1] = (F[2:] - F[:-2]) / (2 * h)
    return tab.grid, dens, CubicSpline(tab.grid, F), tab.error_estimate


def _F_ext(spline, x):
    out = spline(np.clip(x, -10.0, 10.0))
    out = np.where(x > 10.0, 1.0, out)
    out = np.where(x < -10.0, 0.0, out)
    return np.clip(out, 0.0, 1.0)


def p_xi(xi: float) -> float:
    """P(chi - chi' <= xi) for independent GUE variables, |xi| <= 15."""
    if abs(xi) > 15:
        raise ValueError("p_xi is evaluated for |xi| <= 15")
    y, dens, spline, _ = _pxi_parts()
    integrand = dens * _F_ext(spline, y + xi)
    return float(np.clip(trapezoid(integrand, y), 0.0, 1.0))
