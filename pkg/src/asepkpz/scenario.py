"""Initial data, labels, events and replica runners for the shock scenario.

Particles (first class, i.e. those of eta^2) and holes (those of eta^1) keep
their order under exclusion dynamics, so labels are recovered from order:
x_n(s) is the (n+N)-th particle of eta^2_s counted from the right and H_n(s)
the (n+N)-th hole of eta^1_s counted from the left. In particular

    P_t = #{eta^2 particles at sites > -t^chi'} - N,
    H_t = #{eta^1 holes at sites < t^chi'} - N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import _engine
from .dynamics import (GUARD, BoundaryError, ClockStream, CouplingError, CoupledEnsemble,
                       run_until_coalesced, second_class_ensemble, track_discrepancy,
                       window_margin)
from .lattice import HOLES, PARTICLES, SiteConfiguration, reversed_step

N_LABEL_MAX = 64


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class ScenarioParams:
    p: float
    t: float
    M: int = 1
    chi: float = 0.30
    chi_prime: float = 0.45
    delta: float = 0.15
    margin: Optional[int] = None

    def __post_init__(self):
        if not 0.5 < self.p <= 1.0:
            raise ValueError("p must lie in (1/2, 1]")
        if not 0 < self.delta < self.chi < self.chi_prime < 0.5:
            raise ValueError("need 0 < delta < chi < chi' < 1/2")
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.t <= 0:
            raise ValueError("t must be positive")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def C(self) -> float:
        return 2.0 * math.sqrt(self.M / (self.p - self.q))

    @property
    def N_real(self) -> float:
        return (self.p - self.q) * (self.t - self.C * math.sqrt(self.t))

    @property
    def N(self) -> int:
        return round_half_away(self.N_real)

    @property
    def t_delta(self) -> float:
        return self.t ** self.delta

    @property
    def t_chi(self) -> float:
        return self.t ** self.chi

    @property
    def t_chi_prime(self) -> float:
        return self.t ** self.chi_prime

    @property
    def t_check(self) -> float:
        """The observation time t - t^chi of P_t, H_t and the events."""
        return self.t - self.t_chi

    @property
    def window_margin(self) -> int:
        return self.margin if self.margin is not None else window_margin(self.t)

    def window(self) -> tuple[int, int]:
        m = self.window_margin
        N = self.N
        return -N - 1 - N_LABEL_MAX - m, N + 1 + N_LABEL_MAX + m


def _check_N(params: ScenarioParams):
    if params.N < 1:
        raise ValueError(f"N(t, M) = {params.N_real:.3f} rounds below 1; t too small for M")


def make_eta1(params: ScenarioParams) -> SiteConfiguration:
    """1_{j < -N} + 1_{0..N} on the padded window."""
    _check_N(params)
    lo, hi = params.window()
    j = np.arange(lo, hi + 1)
    N = params.N
    occ = ((j < -N) | ((j >= 0) & (j <= N))).astype(np.uint8)
    return SiteConfiguration(lo, occ, PARTICLES, HOLES)


def make_eta2_eta(params: ScenarioParams) -> tuple[SiteConfiguration, SiteConfiguration]:
    """(eta^1, eta^2): eta^2 is eta^1 with the particle at 0 removed."""
    e1 = make_eta1(params)
    occ = e1.occupancy.copy()
    occ[-e1.window_lo] = 0
    return e1, SiteConfiguration(e1.window_lo, occ, PARTICLES, HOLES)


# ---------------------------------------------------------------- labels

@dataclass(frozen=True)
class LabeledTrajectories:
    """Label positions at checkpoint times; rows are times, columns labels."""

    N: int
    labels: np.ndarray
    times: np.ndarray
    particles: np.ndarray
    holes: np.ndarray

    def x(self, n: int, k: int = -1) -> int:
        return int(self.particles[k, n - int(self.labels[0])])

    def H(self, n: int, k: int = -1) -> int:
        return int(self.holes[k, n - int(self.labels[0])])


def label_range(N: int, n_max: int = N_LABEL_MAX) -> np.ndarray:
    return np.arange(max(-N + 1, -n_max), n_max + 1)


def label_positions(eta1: np.ndarray, eta2: np.ndarray, lo: int, N: int,
                    labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Particle positions x_n (from eta^2) and hole positions H_n (from eta^1) by order."""
    parts = np.flatnonzero(eta2)[::-1] + lo     # right to left
    holes = np.flatnonzero(eta1 == 0) + lo      # left to right
    k = labels + N - 1
    if k.max() >= parts.size or k.max() >= holes.size:
        raise BoundaryError("window too small to hold the tracked labels")
    return parts[k], holes[k]


def assign_labels(params: ScenarioParams) -> LabeledTrajectories:
    """Labels at time 0, read off eta^1 and eta^2 by order."""
    e1, e2 = make_eta2_eta(params)
    labels = label_range(params.N)
    x, h = label_positions(e1.occupancy, e2.occupancy, e1.window_lo, params.N, labels)
    return LabeledTrajectories(params.N, labels, np.array([0.0]), x[None, :], h[None, :])


def initial_labels_formula(n, N: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n)
    x = np.where(n >= 1, -n - N, -n + 1)
    h = np.where(n >= 1, n + N, n - 1)
    return x, h


def compute_PH(traj: LabeledTrajectories, params: ScenarioParams, k: int = -1) -> tuple[int, int, bool]:
    """(P_t, H_t, audit_flag) from label positions at checkpoint row ``k``.

    The flag is raised when the answer touches the boundary of the tracked
    label range: no tracked label qualifies, or the largest one does.
    """
    thr = params.t_chi_prime
    xs = traj.particles[k]
    hs = traj.holes[k]
    lab = traj.labels
    flag = False
    qual = lab[xs > -thr]
    if qual.size == 0:
        P = int(lab[0]) - 1
        flag = True
    else:
        P = int(qual.max())
        flag |= P == int(lab[-1])
    qual = lab[hs < thr]
    if qual.size == 0:
        H = int(lab[0]) - 1
        flag = True
    else:
        H = int(qual.max())
        flag |= H == int(lab[-1])
    return P, H, flag


def detect_events(traj: LabeledTrajectories, X: int, params: ScenarioParams, L: int, R: int,
                  k: int = -1) -> tuple[bool, bool, bool]:
    """(B_L, D_R, F^delta_{L,R}) at checkpoint row ``k`` (meant to be t - t^chi)."""
    td, tcp = params.t_delta, params.t_chi_prime
    lab0 = int(traj.labels[0])

    def xpos(n):
        if n < lab0:
            return math.inf
        return traj.particles[k, n - lab0]

    def hpos(n):
        if n < lab0:
            return -math.inf
        return traj.holes[k, n - lab0]

    B = bool(xpos(L) > -td and xpos(L + 1) <= -tcp)
    D = bool(hpos(R) < td and hpos(R + 1) >= tcp)
    F = B and D and abs(X) <= td
    return B, D, F


# ---------------------------------------------------------------- replacement and Omega_Z data

def replace_tails(cfg: SiteConfiguration, threshold: float) -> SiteConfiguration:
    """cfg on |j| <= threshold, holes to the left, particles to the right."""
    d = int(math.floor(threshold))
    lo, hi = -d - 1, d + 1
    j = np.arange(lo, hi + 1)
    occ = cfg.values(j)
    occ[j < -threshold] = 0
    occ[j > threshold] = 1
    return SiteConfiguration(lo, occ, HOLES, PARTICLES)


def make_eta_Z(Z: int, params: ScenarioParams) -> SiteConfiguration:
    """1_{-t^delta <= j <= Z} + 1_{j > t^delta}, an element of Omega_{-Z}."""
    td = params.t_delta
    if not td > abs(Z):
        raise ValueError(f"need t^delta = {td:.3f} > |Z| = {abs(Z)}")
    d = int(math.floor(td))
    lo, hi = -d - 1, d + 1
    j = np.arange(lo, hi + 1)
    occ = (((j >= -td) & (j <= Z)) | (j > td)).astype(np.uint8)
    return SiteConfiguration(lo, occ, HOLES, PARTICLES)


def _common_window(cfgs: Sequence[SiteConfiguration], margin: int) -> list[SiteConfiguration]:
    lo = min(c.window_lo for c in cfgs) - margin
    hi = max(c.window_hi for c in cfgs) + margin
    return [c.rewindow(lo, hi) for c in cfgs]


def coalescence_time(cfgA: SiteConfiguration, cfgB: SiteConfiguration, stream: ClockStream,
                     horizon: float, margin: Optional[int] = None) -> Optional[float]:
    """First time the coupled pair agrees everywhere, or None if not by ``horizon``."""
    if (cfgA.left_tail, cfgA.right_tail) != (cfgB.left_tail, cfgB.right_tail):
        raise ValueError("tail mismatch: the pair can never coalesce")
    if cfgA == cfgB:
        return 0.0
    if margin is None:
        margin = window_margin(horizon)
    a, b = _common_window([cfgA, cfgB], margin)
    ens = CoupledEnsemble.from_members([a, b], stream)
    t, _ = run_until_coalesced(ens, horizon)
    return t


def make_I0(Z: int, params: ScenarioParams) -> SiteConfiguration:
    """1_{-t^delta-2Z-1 <= j <= -Z-1} + 1_{j > t^delta}: the minimal companion of eta^Z in Omega_{-Z}."""
    td = params.t_delta
    if not td > abs(Z):
        raise ValueError(f"need t^delta = {td:.3f} > |Z| = {abs(Z)}")
    d = int(math.floor(td))
    lo = min(-d - 2 * abs(Z) - 2, -d - 1)
    hi = d + 1
    j = np.arange(lo, hi + 1)
    occ = (((j >= -td - 2 * Z - 1) & (j <= -Z - 1)) | (j > td)).astype(np.uint8)
    return SiteConfiguration(lo, occ, HOLES, PARTICLES)


def hitting_time(cfg: SiteConfiguration, target: SiteConfiguration, stream: ClockStream,
                 horizon: float, margin: Optional[int] = None) -> Optional[float]:
    """First time the ASEP from ``cfg`` equals the fixed configuration ``target`` (None past horizon)."""
    if (cfg.left_tail, cfg.right_tail) != (target.left_tail, target.right_tail):
        raise ValueError("tail mismatch: the target can never be hit")
    if stream.explicit is not None:
        raise ValueError("hitting_time needs a seeded stream")
    if margin is None:
        margin = window_margin(horizon)
    a, b = _common_window([cfg, target], margin)
    occ = a.occupancy[None, :].astype(np.uint8).copy()
    status, t = _engine.hit_target(occ, a.window_lo, stream._seed64(), stream.p, 0.0, float(horizon),
                                   b.occupancy.astype(np.uint8), GUARD)
    if status == _engine.COALESCED:
        return float(t)
    _raise_status(status)
    return None


def second_class_XZ(Z: int, stream: ClockStream, t1: float,
                    checkpoints: Optional[Sequence[float]] = None,
                    margin: Optional[int] = None) -> list[int]:
    """Discrepancy of (eta^{-step(Z)}, eta^{-step(Z+1)}) at the checkpoints (default: t1)."""
    if checkpoints is None:
        checkpoints = [t1]
    if margin is None:
        margin = window_margin(t1)
    a = reversed_step(Z, Z - margin, Z + margin)
    b = reversed_step(Z + 1, Z - margin, Z + margin)
    ens = second_class_ensemble(a, b, stream)
    traj, _ = track_discrepancy(ens, list(checkpoints))
    return traj


# ---------------------------------------------------------------- replica runners

@dataclass
class ScenarioOutcome:
    P_t: int
    H_t: int
    X_t: int
    X_check: int            # X(t - t^chi)
    B: bool                 # B_{P_t}
    D: bool                 # D_{H_t}
    F: bool                 # F^delta_{P_t, H_t}; the only (L, R) whose flag can be set
    X_tilde: Optional[int]  # None if the replaced pair has no discrepancy
    agree: bool             # eta-tilde_t = eta_t on |j| <= t^chi'/2
    eta1_near0: np.ndarray  # eta^1_t on [-S, S]
    eta2_nearX: np.ndarray  # eta^2_t on [X_t - S, X_t + S]
    audit_flag: bool = False
    events: int = 0

    def flag(self, L: int, R: int) -> bool:
        return self.F and (L, R) == (self.P_t, self.H_t)


@lru_cache(maxsize=8)
def _initial_rows(params: ScenarioParams) -> tuple[np.ndarray, int]:
    e1, e2 = make_eta2_eta(params)
    return np.stack([e1.occupancy, e2.occupancy]), e1.window_lo


def _raise_status(status):
    if status == _engine.BOUNDARY:
        raise BoundaryError("activity reached the guard sites of the window")
    if status == _engine.DISCREPANCY_GREW:
        raise CouplingError("discrepancy count increased")


def _single_discrepancy(occ: np.ndarray, a: int, b: int, lo: int) -> int:
    d = np.flatnonzero(occ[a] != occ[b])
    if d.size != 1:
        raise CouplingError(f"expected one discrepancy, found {d.size}")
    return int(d[0]) + lo


def _window(row: np.ndarray, lo: int, c: int, S: int) -> np.ndarray:
    k = c - lo
    if k - S < 0 or k + S + 1 > row.size:
        raise BoundaryError("snapshot leaves the window")
    return row[k - S:k + S + 1].copy()


def run_scenario_replica(params: ScenarioParams, seed: int, snapshot: int = 12,
                         audit: bool = True) -> ScenarioOutcome:
    """One coupled (eta^1, eta^2) replica with the tail-replaced pair from t - t^chi."""
    base, lo = _initial_rows(params)
    occ = base.copy()
    s64 = np.uint64(seed % 2 ** 64)
    tc = params.t_check
    status, ev1, _ = _engine.evolve_lazy(occ, lo, s64, params.p, 0.0, tc, GUARD, audit, False)
    _raise_status(status)
    N = params.N
    j = np.arange(lo, lo + occ.shape[1])
    td, tcp = params.t_delta, params.t_chi_prime
    X_c = _single_discrepancy(occ, 0, 1, lo)

    P = int(np.count_nonzero(occ[1] & (j > -tcp))) - N
    H = int(np.count_nonzero((occ[0] == 0) & (j < tcp))) - N
    audit_flag = not (-N <= P < N_LABEL_MAX and -N <= H < N_LABEL_MAX)
    # B_P: x_P > -t^delta, i.e. no eta^2 particle in (-t^chi', -t^delta]; x_{P+1} <= -t^chi' by definition
    B = not np.any(occ[1] & (j > -tcp) & (j <= -td)) and P > -N
    D = not np.any((occ[0] == 0) & (j < tcp) & (j >= td)) and H > -N
    F = B and D and abs(X_c) <= td

    # tilde pair from t - t^chi, driven by the same clocks
    inner = np.abs(j) <= td
    tilde = np.where(inner[None, :], occ, (j > td).astype(np.uint8)[None, :])
    occ4 = np.concatenate([occ, tilde]).astype(np.uint8)
    status, ev2, _ = _engine.evolve_lazy(occ4, lo, s64, params.p, tc, params.t, GUARD, audit, False)
    _raise_status(status)
    X_t = _single_discrepancy(occ4, 0, 1, lo)
    dt = np.flatnonzero(occ4[2] != occ4[3])
    X_tilde = int(dt[0]) + lo if dt.size == 1 else None
    half = np.abs(j) <= tcp / 2
    agree = bool(np.array_equal(occ4[0, half], occ4[2, half]) and np.array_equal(occ4[1, half], occ4[3, half]))
    return ScenarioOutcome(P, H, X_t, X_c, bool(B), bool(D), bool(F), X_tilde, agree,
                           _window(occ4[0], lo, 0, snapshot), _window(occ4[1], lo, X_t, snapshot),
                           audit_flag, int(ev1 + ev2))


def run_labeled_replica(params: ScenarioParams, seed: int,
                        checkpoints: Sequence[float]) -> LabeledTrajectories:
    """Evolve (eta^1, eta^2) and record label positions at the checkpoints (slow path)."""
    base, lo = _initial_rows(params)
    occ = base.copy()
    s64 = np.uint64(seed % 2 ** 64)
    labels = label_range(params.N)
    xs, hs = [], []
    t0 = 0.0
    for t in checkpoints:
        status, _, _ = _engine.evolve_lazy(occ, lo, s64, params.p, t0, float(t), GUARD, True, False)
        _raise_status(status)
        x, h = label_positions(occ[0], occ[1], lo, params.N, labels)
        xs.append(x)
        hs.append(h)
        t0 = float(t)
    return LabeledTrajectories(params.N, labels, np.asarray(checkpoints, float), np.array(xs), np.array(hs))


def run_density_replica(params: ScenarioParams, seed: int) -> tuple[np.ndarray, int]:
    """eta^1_t on the whole window (for density profiles)."""
    base, lo = _initial_rows(params)
    occ = base[:1].copy()
    status, _, _ = _engine.evolve_lazy(occ, lo, np.uint64(seed % 2 ** 64), params.p, 0.0,
                                       params.t, GUARD, False, False)
    _raise_status(status)
    return occ[0], lo


@dataclass
class StepOutcome:
    X: int
    eta_nearX: np.ndarray  # eta^{-step(Z+1)}_t on [X - S, X + S]


@lru_cache(maxsize=8)
def _step_rows(Z: int, margin: int) -> tuple[np.ndarray, int]:
    lo, hi = Z - margin, Z + margin
    a = reversed_step(Z, lo, hi).occupancy
    b = reversed_step(Z + 1, lo, hi).occupancy
    return np.stack([a, b]), lo


def run_step_replica(Z: int, p: float, t: float, seed: int, snapshot: int = 12,
                     margin: Optional[int] = None) -> StepOutcome:
    """X^Z(t) and the view of eta^{-step(Z+1)}_t around it."""
    if margin is None:
        margin = window_margin(t)
    base, lo = _step_rows(Z, margin)
    occ = base.copy()
    status, _, _ = _engine.evolve_lazy(occ, lo, np.uint64(seed % 2 ** 64), p, 0.0, float(t),
                                       GUARD, True, False)
    _raise_status(status)
    X = _single_discrepancy(occ, 0, 1, lo)
    return StepOutcome(X, _window(occ[1], lo, X, snapshot))


def run_coalescence_replica(params: ScenarioParams, seed: int, Z: int = 0,
                            horizon: Optional[float] = None) -> Optional[float]:
    """Coalescence time of eta^Z with eta^{-step(-Z)} (None beyond ``horizon``, default 4 t^chi)."""
    if horizon is None:
        horizon = 4 * params.t_chi
    a = make_eta_Z(Z, params)
    b = reversed_step(-Z)
    return coalescence_time(a, b, ClockStream(seed, params.p), horizon)
