"""Graphical construction: shared Poisson clocks driving coupled configurations.

A :class:`ClockStream` is either seeded (rings are a pure function of
``(seed, edge, time-interval, index)``, see :mod:`asepkpz._engine`) or an
explicit list of :class:`EdgeEvent` for hand-built test scenarios. A
:class:`CoupledEnsemble` applies the same rings to every member, which is the
basic coupling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _engine
from .lattice import SiteConfiguration, discrepancy_set

RIGHT = 1
LEFT = -1
GUARD = 8


class BoundaryError(RuntimeError):
    """A ring moved mass inside the outermost guard sites of the window."""


class CouplingError(RuntimeError):
    """A coupling invariant (e.g. single discrepancy) was violated."""


@dataclass(frozen=True)
class EdgeEvent:
    time: float
    edge: int
    direction: int  # RIGHT or LEFT


def replica_seed(master_seed: int, replica: int) -> int:
    """Seed of replica ``r``: ``splitmix64(splitmix64(master) ^ r)``, stable everywhere."""
    return int(_engine.stream_seed(np.uint64(master_seed % 2**64), np.uint64(replica)))


@dataclass(frozen=True)
class ClockStream:
    """Poisson rings with rate ``p`` rightward and ``1 - p`` leftward on each edge."""

    seed: int
    p: float
    horizon: float = math.inf
    explicit: Optional[tuple] = None

    def __post_init__(self):
        if not 0.5 < self.p <= 1.0 and self.explicit is None:
            raise ValueError(f"p must lie in (1/2, 1], got {self.p}")

    @classmethod
    def from_events(cls, events: Sequence[EdgeEvent], horizon: float = math.inf) -> "ClockStream":
        ev = sorted(events, key=lambda e: e.time)
        times = [e.time for e in ev]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        return cls(seed=0, p=1.0, horizon=horizon, explicit=tuple(ev))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def _seed64(self):
        return np.uint64(self.seed % 2**64)

    def event_arrays(self, edge_lo: int, edge_hi: int, t0: float, t1: float):
        """Time-ordered rings in ``(t0, t1]`` on edges ``edge_lo..edge_hi``."""
        if self.explicit is not None:
            sel = [e for e in self.explicit if t0 < e.time <= t1 and edge_lo <= e.edge <= edge_hi]
            return (np.array([e.time for e in sel], dtype=np.float64),
                    np.array([e.edge for e in sel], dtype=np.int64),
                    np.array([e.direction for e in sel], dtype=np.int8))
        return _engine.enumerate_rings(self._seed64(), edge_lo, edge_hi, float(t0), float(t1), self.p)

    def events(self, edge_lo: int, edge_hi: int, t0: float, t1: float) -> list[EdgeEvent]:
        times, edges, dirs = self.event_arrays(edge_lo, edge_hi, t0, t1)
        return [EdgeEvent(float(t), int(e), int(d)) for t, e, d in zip(times, edges, dirs)]


@dataclass(frozen=True, eq=False)
class CoupledEnsemble:
    """Members sharing window, tails and clocks; ``occ`` is a (members, sites) array."""

    occ: np.ndarray
    window_lo: int
    left_tail: int
    right_tail: int
    stream: ClockStream
    clock: float = 0.0
    events: int = field(default=0, compare=False)

    @classmethod
    def from_members(cls, members: Sequence[SiteConfiguration], stream: ClockStream,
                     clock: float = 0.0) -> "CoupledEnsemble":
        if not members:
            raise ValueError("ensemble needs at least one member")
        first = members[0]
        tails = (first.left_tail, first.right_tail)
        lo, hi = first.window_lo, first.window_hi
        for m in members[1:]:
            if (m.left_tail, m.right_tail) != tails:
                raise ValueError("members must share tail species")
            if (m.window_lo, m.window_hi) != (lo, hi):
                raise ValueError("members must share the window")
        occ = np.stack([m.occupancy for m in members]).astype(np.uint8)
        return cls(occ, lo, tails[0], tails[1], stream, float(clock))

    @property
    def window_hi(self) -> int:
        return self.window_lo + self.occ.shape[1] - 1

    @property
    def members(self) -> list[SiteConfiguration]:
        return [SiteConfiguration(self.window_lo, row, self.left_tail, self.right_tail)
                for row in self.occ]

    def member(self, i: int) -> SiteConfiguration:
        return SiteConfiguration(self.window_lo, self.occ[i], self.left_tail, self.right_tail)

    def value(self, i: int, site: int) -> int:
        k = site - self.window_lo
        if k < 0:
            return self.left_tail
        if k >= self.occ.shape[1]:
            return self.right_tail
        return int(self.occ[i, k])

    def discrepancies(self, a: int = 0, b: int = 1) -> np.ndarray:
        return np.flatnonzero(self.occ[a] != self.occ[b]) + self.window_lo


def _check_advance(ens: CoupledEnsemble, t1: float):
    if t1 < ens.clock:
        raise ValueError(f"cannot evolve backwards from {ens.clock} to {t1}")
    if t1 > ens.stream.horizon:
        raise ValueError(f"time {t1} exceeds stream horizon {ens.stream.horizon}")


def _raise_status(status: int, ens: CoupledEnsemble):
    if status == _engine.BOUNDARY:
        raise BoundaryError(
            f"activity within {GUARD} sites of the window edge "
            f"[{ens.window_lo}, {ens.window_hi}]; enlarge the margin")
    if status == _engine.DISCREPANCY_GREW:
        raise CouplingError("discrepancy count between two members increased")


def evolve(ens: CoupledEnsemble, t1: float, audit: bool = False) -> CoupledEnsemble:
    """Apply every ring in ``(clock, t1]`` on every window edge, in time order."""
    _check_advance(ens, t1)
    occ = ens.occ.copy()
    lo = ens.window_lo
    times, edges, dirs = ens.stream.event_arrays(lo, lo + occ.shape[1] - 2, ens.clock, t1)
    status, n = _engine.apply_events(occ, lo, times, edges, dirs, GUARD, audit)
    _raise_status(status, ens)
    return replace(ens, occ=occ, clock=float(t1), events=ens.events + int(n))


def evolve_lazy(ens: CoupledEnsemble, t1: float, audit: bool = False) -> CoupledEnsemble:
    """Same trajectory as :func:`evolve`, processing rings only on active edges.

    Explicit (hand-built) streams are short; they go through :func:`evolve`.
    """
    _check_advance(ens, t1)
    if ens.stream.explicit is not None:
        return evolve(ens, t1, audit)
    occ = ens.occ.copy()
    status, n, _ = _engine.evolve_lazy(occ, ens.window_lo, ens.stream._seed64(), ens.stream.p,
                                       float(ens.clock), float(t1), GUARD, audit, False)
    _raise_status(status, ens)
    return replace(ens, occ=occ, clock=float(t1), events=ens.events + int(n))


def run_until_coalesced(ens: CoupledEnsemble, horizon: float) -> tuple[Optional[float], CoupledEnsemble]:
    """Evolve a two-member ensemble until the members agree; time is None past ``horizon``."""
    if ens.occ.shape[0] != 2:
        raise ValueError("coalescence needs exactly two members")
    _check_advance(ens, horizon)
    occ = ens.occ.copy()
    status, n, t = _engine.evolve_lazy(occ, ens.window_lo, ens.stream._seed64(), ens.stream.p,
                                       float(ens.clock), float(horizon), GUARD, False, True)
    if status == _engine.COALESCED:
        return float(t), replace(ens, occ=occ, clock=float(t), events=ens.events + int(n))
    _raise_status(status, ens)
    return None, replace(ens, occ=occ, clock=float(horizon), events=ens.events + int(n))


def track_discrepancy(ens: CoupledEnsemble, checkpoints: Sequence[float],
                      lazy: bool = True) -> tuple[list[int], CoupledEnsemble]:
    """Position of the single discrepancy between members 0 and 1 at each checkpoint."""
    if ens.occ.shape[0] != 2:
        raise ValueError("second-class tracking needs exactly two members")
    d = ens.discrepancies()
    if d.size != 1:
        raise CouplingError(f"expected one discrepancy, found {d.size}")
    step = evolve_lazy if lazy else evolve
    out = []
    for t in checkpoints:
        ens = step(ens, t, audit=True)
        d = ens.discrepancies()
        if d.size != 1:
            raise CouplingError(f"discrepancy count {d.size} at time {t}")
        out.append(int(d[0]))
    return out, ens


def window_margin(t: float) -> int:
    """Safety margin ``ceil(4 (p + q) t) + 64`` sites (p + q = 1) beyond data and observation sites."""
    return int(math.ceil(4.0 * t)) + 64


def second_class_ensemble(cfg1: SiteConfiguration, cfg2: SiteConfiguration,
                          stream: ClockStream, clock: float = 0.0) -> CoupledEnsemble:
    if len(discrepancy_set(cfg1, cfg2)) != 1:
        raise CouplingError("members must differ at exactly one site")
    return CoupledEnsemble.from_members([cfg1, cfg2], stream, clock)
