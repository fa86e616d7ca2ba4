"""Blocking measure mu and its conditionings mu_Z.

mu is the product measure with mu(zeta(i) = 1) = r^i / (1 + r^i), r = p/q.
Under mu the configuration lies in Omega_Z exactly when

    N_minus = #particles at sites < Z  equals  N_plus = #holes at sites >= Z,

so mu_Z(f_A) is a ratio of two sums over k of P(N_minus = k) P(N_plus = k),
with the sites of A forced occupied in the numerator. Both counts are sums of
independent Bernoullis over a window of half-width W around Z; outside the
window the configuration is frozen at the tail values, which costs at most
the geometric bound :func:`tail_bound`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import expit

from .lattice import HOLES, PARTICLES, SiteConfiguration

DEFAULT_W = 40
MIN_SLACK = 8


def mu_marginal(i, p: float):
    """mu(zeta(i) = 1) = (p/q)^i / (1 + (p/q)^i), evaluated without overflow."""
    if not 0.5 < p < 1.0:
        raise ValueError("blocking measure needs p in (1/2, 1)")
    i = np.asarray(i, dtype=float)
    lr = math.log(p / (1.0 - p))
    out = expit(lr * i)
    return float(out) if out.ndim == 0 else out


def _hole_prob(i, p: float):
    lr = math.log(p / (1.0 - p))
    return expit(-lr * np.asarray(i, dtype=float))


def tail_bound(W: int, p: float) -> float:
    rq = (1.0 - p) / p
    return rq ** (W + 1) / (1.0 - rq)


@dataclass(frozen=True)
class BlockingQuery:
    Z: int
    A: tuple
    W: int = DEFAULT_W
    strict: bool = True  # demand MIN_SLACK spare sites beyond A; off only for enumeration checks

    def __post_init__(self):
        A = tuple(sorted(set(int(a) for a in self.A)))
        object.__setattr__(self, "A", A)
        need = max((abs(a - self.Z) for a in A), default=0) + (MIN_SLACK if self.strict else 0)
        if self.W < need:
            raise ValueError(f"W={self.W} too small for A={A} around Z={self.Z}; need W >= {need}")


def _count_law(probs: np.ndarray, forced: np.ndarray) -> np.ndarray:
    """Law of sum of independent Bernoulli(probs); forced entries count 1 with weight probs.

    The result is unnormalised when some entries are forced (it then carries
    the probability that the forced events happen).
    """
    law = np.zeros(probs.size + 1)
    law[0] = 1.0
    n = 0
    for pr, f in zip(probs, forced):
        new = np.zeros_like(law)
        if f:
            new[1:n + 2] = law[:n + 1] * pr
        else:
            new[:n + 1] = law[:n + 1] * (1.0 - pr)
            new[1:n + 2] += law[:n + 1] * pr
        law = new
        n += 1
    return law


def count_laws(Z: int, W: int, p: float, A: Iterable[int] = ()):
    """(law of N_minus, law of N_plus) on the window, A-sites forced occupied.

    Left A-sites are forced to be particles (count 1 toward N_minus); right
    A-sites are forced to be particles, i.e. forced non-holes (count 0).
    """
    A = set(A)
    left = np.arange(Z - W, Z)
    right = np.arange(Z, Z + W + 1)
    lp = mu_marginal(left, p)
    nminus = _count_law(lp, np.array([j in A for j in left]))
    hp = _hole_prob(right, p)
    # forcing a particle at a right site: the hole indicator is forced to 0 with weight 1 - hp
    forced_r = np.array([j in A for j in right])
    law = np.zeros(right.size + 1)
    law[0] = 1.0
    for h, f in zip(hp, forced_r):
        new = np.zeros_like(law)
        if f:
            new = law * (1.0 - h)
        else:
            new[:] = law * (1.0 - h)
            new[1:] += law[:-1] * h
        law = new
    return nminus, law


def omega_atom(Z: int, W: int, p: float) -> float:
    """mu(Omega_Z) restricted to the window: sum_k P(N_minus = k) P(N_plus = k)."""
    a, b = count_laws(Z, W, p)
    k = min(a.size, b.size)
    return float(np.dot(a[:k], b[:k]))


def mu_Z_cylinder(query: BlockingQuery, p: float) -> tuple[float, float]:
    """mu_Z(f_A) and the truncation error bound."""
    Z, W = query.Z, query.W
    a0, b0 = count_laws(Z, W, p)
    aA, bA = count_laws(Z, W, p, query.A)
    k = min(a0.size, b0.size)
    num = float(np.dot(aA[:k], bA[:k]))
    den = float(np.dot(a0[:k], b0[:k]))
    return num / den, tail_bound(W, p)


def mu_Z(Z: int, A: Iterable[int], p: float, W: int = DEFAULT_W) -> float:
    return mu_Z_cylinder(BlockingQuery(Z, tuple(A), W), p)[0]


def mu_Z_brute(Z: int, A: Iterable[int], p: float, W: int) -> float:
    """Exhaustive enumeration over the 2^(2W+1) window configurations."""
    sites = np.arange(Z - W, Z + W + 1)
    n = sites.size
    if n > 20:
        raise ValueError("window too large for enumeration")
    bits = ((np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    rho = mu_marginal(sites, p)
    w = np.prod(np.where(bits, rho[None, :], 1.0 - rho[None, :]), axis=1)
    below = sites < Z
    in_omega = bits[:, below].sum(axis=1) == (~bits[:, ~below]).sum(axis=1)
    idx = [int(a - (Z - W)) for a in A]
    fa = np.all(bits[:, idx], axis=1) if idx else np.ones(bits.shape[0], dtype=bool)
    return float(np.sum(w * in_omega * fa) / np.sum(w * in_omega))


@dataclass(frozen=True)
class SampleBatch:
    occupancy: np.ndarray  # (n, 2W+1) window occupancies on [Z-W, Z+W]
    window_lo: int
    atom: float            # mu(Omega_Z) on the window, the expected acceptance rate
    acceptance: float      # realised acceptance rate
    draws: int

    def config(self, i: int) -> SiteConfiguration:
        return SiteConfiguration(self.window_lo, self.occupancy[i], HOLES, PARTICLES)


class SamplingError(RuntimeError):
    pass


def sample_mu_Z_batch(Z: int, n: int, p: float, W: int = DEFAULT_W, seed: int = 0,
                      max_draws: int = 10 ** 8, chunk: int = 20000) -> SampleBatch:
    """Rejection sampling from mu_Z: draw mu on the window, keep draws in Omega_Z."""
    rng = np.random.default_rng(seed)
    sites = np.arange(Z - W, Z + W + 1)
    rho = mu_marginal(sites, p)
    kept = []
    got = 0
    accepted = 0
    draws = 0
    while got < n:
        if draws >= max_draws:
            raise SamplingError(f"only {got}/{n} samples accepted after {draws} draws")
        occ = (rng.random((chunk, sites.size)) < rho[None, :]).astype(np.uint8)
        draws += chunk
        z_of = sites[0] + (sites.size - occ.sum(axis=1))
        acc = occ[z_of == Z]
        accepted += acc.shape[0]
        kept.append(acc[: n - got])
        got += min(acc.shape[0], n - got)
    occ = np.concatenate(kept, axis=0)
    return SampleBatch(occ, int(sites[0]), omega_atom(Z, W, p), accepted / draws, draws)


def sample_mu_Z(Z: int, W: int, p: float, seed: int = 0) -> SiteConfiguration:
    return sample_mu_Z_batch(Z, 1, p, W, seed, chunk=256).config(0)


def fit_decay(p: float, n_range=range(5, 16), W: int = DEFAULT_W) -> tuple[float, float]:
    """Least-squares fit log(1 - mu_0(f_{n})) = c + slope * n; returns (slope, exp(c))."""
    n = np.array(list(n_range))
    y = np.log([1.0 - mu_Z(0, [int(k)], p, W) for k in n])
    slope, c = np.polyfit(n, y, 1)
    return float(slope), float(math.exp(c))
