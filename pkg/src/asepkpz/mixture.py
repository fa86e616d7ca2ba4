"""Mixture weights p_{L,R} and the limit formulas built from them."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .blocking import DEFAULT_W, MIN_SLACK, BlockingQuery, mu_Z_cylinder
from .distributions import F_LC

NEG_TOL = 1e-10


@lru_cache(maxsize=64)
def F_column(M: int, p: float, upto: int) -> tuple[np.ndarray, bool]:
    """F_{L,p}(C(M)) for L = 0..upto and whether any entry is the hybrid approximation."""
    vals = np.empty(upto + 1)
    approx = False
    for L in range(upto + 1):
        vals[L], a = F_LC(L, M, p)
        approx |= a
    return vals, approx


def _marginal(F: np.ndarray, L: int) -> float:
    d = F[L] - F[L + 1]
    if d < -NEG_TOL:
        raise ArithmeticError(f"F_L - F_(L+1) = {d:.3e} < 0 at L={L}: F evaluation failed")
    return max(d, 0.0)


def p_LR(L: int, R: int, M: int, p: float) -> float:
    if L < 0 or R < 0:
        return 0.0
    F, _ = F_column(M, p, max(L, R) + 1)
    return _marginal(F, L) * _marginal(F, R)


@dataclass(frozen=True)
class MixtureSpec:
    M: int
    p: float
    D: int
    weights: np.ndarray  # (D+1, D+1), weights[L, R] = p_{L,R}
    F: np.ndarray        # F_{L,p}(C(M)), L = 0..D+1
    tail_bound: float    # 1 - (1 - F_{D+1})^2 >= 1 - sum of weights
    approximate: bool = False

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def nonzero(self):
        for L in range(self.D + 1):
            for R in range(self.D + 1):
                w = self.weights[L, R]
                if w > 0:
                    yield L, R, float(w)


def build_mixture(M: int, p: float, D: int) -> MixtureSpec:
    F, approx = F_column(M, p, D + 1)
    marg = np.array([_marginal(F, L) for L in range(D + 1)])
    W = np.outer(marg, marg)
    tail = 1.0 - (1.0 - F[D + 1]) ** 2
    return MixtureSpec(M, p, D, W, F, float(tail), approx)


def smallest_D(M: int, p: float, target: float = 0.999, D_max: int = 40) -> int:
    for D in range(D_max + 1):
        if build_mixture(M, p, D).total >= target:
            return D
    raise ValueError(f"mass {target} not reached by D={D_max}")


@lru_cache(maxsize=4096)
def _mu(Z: int, A: tuple, p: float) -> tuple[float, float]:
    need = max((abs(a - Z) for a in A), default=0) + MIN_SLACK
    return mu_Z_cylinder(BlockingQuery(Z, A, max(DEFAULT_W, need)), p)


def mixture_cylinder(mix: MixtureSpec, A: Iterable[int], shift: int = 0) -> tuple[float, float]:
    """sum_{L,R} p_{L,R} mu_{R-L-shift}(f_A) and a bound on the truncation error."""
    A = tuple(sorted(set(int(a) for a in A)))
    val = 0.0
    err = 0.0
    for L, R, w in mix.nonzero():
        m, e = _mu(R - L - shift, A, mix.p)
        val += w * m
        err += w * e
    return val, err + mix.tail_bound


def limit_X_cdf(mix: MixtureSpec, i: int, offset: int = 1) -> tuple[float, float]:
    """sum_{L,R} p_{L,R} mu_0(f_{i+L-R+offset}), the limit of P(X(t) <= i).

    The default offset=1 is the conventional index. offset=0 is the version
    consistent with the symmetry of X^0 and with simulation (see :func:`XZ_cdf`).
    """
    val = 0.0
    err = 0.0
    for L, R, w in mix.nonzero():
        m, e = _mu(0, (i + L - R + offset,), mix.p)
        val += w * m
        err += w * e
    return val, err + mix.tail_bound


def XZ_cdf(i: int, Z: int, p: float, offset: int = 1) -> float:
    """mu_0(f_{i-Z+offset}), the limit of P(X^Z(t) <= i).

    The pair (eta^{-step(Z+1)}, eta^{-step(Z)}) is mapped to itself with the two
    rows swapped by j -> 2Z - j combined with particle-hole exchange, so the
    limit law of X^Z is symmetric about Z. Together with
    mu_0(f_n) = 1 - mu_0(f_{-n-1}) this forces offset=0, while the conventional
    index (offset=1, the default) gives a law symmetric about Z - 1. Simulated
    X^0 agrees with offset=0.
    """
    return _mu(0, (i - Z + offset,), p)[0]


def XZ_pmf(i: int, Z: int, p: float, offset: int = 1) -> float:
    """Limit of P(X^Z(t) = i) = mu_0(f_{i-Z+offset}) - mu_0(f_{i-Z-1+offset})."""
    return XZ_cdf(i, Z, p, offset) - XZ_cdf(i - 1, Z, p, offset)
