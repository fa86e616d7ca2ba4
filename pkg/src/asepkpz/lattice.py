"""Configurations on Z with a finite window and constant tails.

A :class:`SiteConfiguration` stores the occupancy of a window
``[window_lo, window_hi]`` together with the species of the two infinite
tails, so initial data such as ``1_{Z<-N} + 1_{0..N}`` is represented exactly.
Every operation here consults the tails.

Textual literals
----------------
:func:`parse` accepts a small grammar used throughout the tests::

    literal := term ("+" term)* ["@" lo ".." hi]
    term    := "empty"
             | "ones:<" a | "ones:<=" a | "ones:>" a | "ones:>=" a
             | "ones:{" a ".." b "}" | "ones:{" a "," b "," ... "}"

The occupied set is the union of the terms. A half-line ``<``/``<=`` term
makes the left tail all-particles, a ``>``/``>=`` term makes the right tail
all-particles; the other tails are holes. Without an explicit ``@lo..hi`` the
window is the smallest one containing every finite breakpoint. Examples::

    parse("ones:<-8 + ones:{0..8}")       # eta^1 with N = 8
    parse("ones:>=3")                     # reversed step at Z = 3
    parse("ones:{-2} + ones:>=1 @-5..5")  # element of Omega_0
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

HOLES = 0
PARTICLES = 1

MAX_WINDOW = 2**31

_TERM_RE = re.compile(r"^ones:(<=|>=|<|>)(-?\d+)$")
_RANGE_RE = re.compile(r"^ones:\{(-?\d+)\.\.(-?\d+)\}$")
_LIST_RE = re.compile(r"^ones:\{(-?\d+(?:,-?\d+)*)\}$")
_WINDOW_RE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


@dataclass(frozen=True, eq=False)
class SiteConfiguration:
    """An element of {0,1}^Z: ``occupancy`` on the window, constant tails outside."""

    window_lo: int
    occupancy: np.ndarray
    left_tail: int = HOLES
    right_tail: int = HOLES

    def __post_init__(self):
        occ = np.asarray(self.occupancy)
        if occ.ndim != 1 or occ.size == 0:
            raise ValueError("occupancy must be a non-empty 1-d sequence")
        if occ.size > MAX_WINDOW:
            raise ValueError(f"window of {occ.size} sites exceeds 2^31")
        if not np.all((occ == 0) | (occ == 1)):
            raise ValueError("occupancy values must be 0 or 1")
        if self.left_tail not in (0, 1) or self.right_tail not in (0, 1):
            raise ValueError("tails must be 0 (holes) or 1 (particles)")
        occ = occ.astype(np.uint8, copy=True)
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "window_lo", int(self.window_lo))
        object.__setattr__(self, "left_tail", int(self.left_tail))
        object.__setattr__(self, "right_tail", int(self.right_tail))

    @property
    def window_hi(self) -> int:
        return self.window_lo + self.occupancy.size - 1

    def __len__(self):
        return self.occupancy.size

    def __getitem__(self, site: int) -> int:
        site = int(site)
        if site < self.window_lo:
            return self.left_tail
        if site > self.window_hi:
            return self.right_tail
        return int(self.occupancy[site - self.window_lo])

    def values(self, sites) -> np.ndarray:
        """Occupancy at an array of sites (tails outside the window)."""
        sites = np.asarray(sites, dtype=np.int64)
        out = np.empty(sites.shape, dtype=np.uint8)
        left = sites < self.window_lo
        right = sites > self.window_hi
        inside = ~(left | right)
        out[left] = self.left_tail
        out[right] = self.right_tail
        out[inside] = self.occupancy[sites[inside] - self.window_lo]
        return out

    def on_window(self, lo: int, hi: int) -> np.ndarray:
        return self.values(np.arange(lo, hi + 1))

    def rewindow(self, lo: int, hi: int) -> "SiteConfiguration":
        """Same element of Omega, stored on ``[lo, hi]``."""
        return SiteConfiguration(lo, self.on_window(lo, hi), self.left_tail, self.right_tail)

    def occupied_sites(self) -> np.ndarray:
        """Occupied sites inside the window."""
        return np.flatnonzero(self.occupancy) + self.window_lo

    def hole_sites(self) -> np.ndarray:
        return np.flatnonzero(self.occupancy == 0) + self.window_lo

    def trimmed(self) -> "SiteConfiguration":
        """Canonical smallest window representation (at least one site is kept)."""
        occ = self.occupancy
        lt, rt = self.left_tail, self.right_tail
        i = 0
        j = occ.size
        while i < j and occ[i] == lt:
            i += 1
        while j > i and occ[j - 1] == rt:
            j -= 1
        if i < j:
            return SiteConfiguration(self.window_lo + i, occ[i:j], lt, rt)
        if lt == rt:
            return SiteConfiguration(0, np.array([lt], dtype=np.uint8), lt, rt)
        # pure step: keep the first right-tail site
        return SiteConfiguration(self.window_lo + i, np.array([rt], dtype=np.uint8), lt, rt)

    def __eq__(self, other):
        if not isinstance(other, SiteConfiguration):
            return NotImplemented
        if (self.left_tail, self.right_tail) != (other.left_tail, other.right_tail):
            return False
        lo = min(self.window_lo, other.window_lo)
        hi = max(self.window_hi, other.window_hi)
        return bool(np.array_equal(self.on_window(lo, hi), other.on_window(lo, hi)))

    def __hash__(self):
        t = self.trimmed()
        return hash((t.window_lo, t.occupancy.tobytes(), t.left_tail, t.right_tail))

    def __repr__(self):
        t = self.trimmed()
        bits = "".join(map(str, t.occupancy.tolist()))
        return (
            f"SiteConfiguration(lo={t.window_lo}, bits={bits!r}, "
            f"tails=({t.left_tail},{t.right_tail}))"
        )

    @classmethod
    def from_sites(cls, sites: Iterable[int], lo: int, hi: int,
                   left_tail: int = HOLES, right_tail: int = HOLES) -> "SiteConfiguration":
        """Window ``[lo, hi]`` with exactly ``sites`` occupied inside it."""
        occ = np.zeros(hi - lo + 1, dtype=np.uint8)
        for s in sites:
            if not lo <= s <= hi:
                raise ValueError(f"site {s} outside window [{lo}, {hi}]")
            occ[s - lo] = 1
        return cls(lo, occ, left_tail, right_tail)


def reversed_step(Z: int, lo: Optional[int] = None, hi: Optional[int] = None) -> SiteConfiguration:
    """``1_{j >= Z}``; holes to the left, particles from ``Z`` on."""
    if lo is None:
        lo = Z - 1
    if hi is None:
        hi = Z
    sites = np.arange(lo, hi + 1)
    return SiteConfiguration(lo, (sites >= Z).astype(np.uint8), HOLES, PARTICLES)


def parse(literal: str) -> SiteConfiguration:
    """Build a configuration from the literal grammar in the module docstring."""
    text = literal.strip()
    window = None
    if "@" in text:
        text, wtxt = text.split("@", 1)
        m = _WINDOW_RE.match(wtxt.strip())
        if not m:
            raise ValueError(f"bad window spec {wtxt!r}")
        window = (int(m.group(1)), int(m.group(2)))
    left_below = None   # all j < left_below occupied
    right_from = None   # all j >= right_from occupied
    finite: set[int] = set()
    for raw in text.split("+"):
        term = raw.strip()
        if term == "empty":
            continue
        m = _TERM_RE.match(term)
        if m:
            op, a = m.group(1), int(m.group(2))
            if op in ("<", "<="):
                bound = a if op == "<" else a + 1
                left_below = bound if left_below is None else max(left_below, bound)
            else:
                bound = a + 1 if op == ">" else a
                right_from = bound if right_from is None else min(right_from, bound)
            continue
        m = _RANGE_RE.match(term)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            finite.update(range(a, b + 1))
            continue
        m = _LIST_RE.match(term)
        if m:
            finite.update(int(v) for v in m.group(1).split(","))
            continue
        raise ValueError(f"cannot parse term {term!r}")

    marks = list(finite)
    if left_below is not None:
        marks += [left_below - 1, left_below]
    if right_from is not None:
        marks += [right_from - 1, right_from]
    if window is None:
        window = (min(marks), max(marks)) if marks else (0, 0)
    lo, hi = window
    if hi < lo:
        raise ValueError("empty window")
    sites = np.arange(lo, hi + 1)
    occ = np.isin(sites, np.fromiter(finite, dtype=np.int64, count=len(finite)))
    if left_below is not None:
        occ |= sites < left_below
    if right_from is not None:
        occ |= sites >= right_from
    left_tail = PARTICLES if left_below is not None else HOLES
    right_tail = PARTICLES if right_from is not None else HOLES
    cfg = SiteConfiguration(lo, occ.astype(np.uint8), left_tail, right_tail)
    # an explicit window must not cut a finite term or a half-line breakpoint
    for s in finite:
        if cfg[s] != 1:
            raise ValueError(f"window {window} does not contain site {s}")
    if left_below is not None and left_below - 1 > hi:
        raise ValueError("window ends inside the left half-line")
    if right_from is not None and right_from < lo:
        raise ValueError("window starts inside the right half-line")
    return cfg


def cylinder_indicator(cfg: SiteConfiguration, A: Iterable[int]) -> int:
    """``f_A(cfg)``: 1 iff every site of ``A`` is occupied; ``f_emptyset = 1``."""
    A = list(A)
    if not A:
        return 1
    return int(np.all(cfg.values(A) == 1))


def shift(cfg: SiteConfiguration, n: int) -> SiteConfiguration:
    """``cfg tau_n``, i.e. ``(cfg tau_n)(i) = cfg(i + n)``."""
    return SiteConfiguration(cfg.window_lo - n, cfg.occupancy, cfg.left_tail, cfg.right_tail)


def _hole_suffix_counts(cfg: SiteConfiguration, lo: int, hi: int) -> np.ndarray:
    """Holes at sites ``>= r`` for r = lo..hi+1 (right tail must be particles)."""
    holes = 1 - cfg.on_window(lo, hi).astype(np.int64)
    return np.concatenate([np.cumsum(holes[::-1])[::-1], [0]])


def partial_order_leq(cfg1: SiteConfiguration, cfg2: SiteConfiguration) -> bool:
    """``cfg1 <= cfg2``: cfg2 has at most as many holes as cfg1 to the right of every r."""
    if cfg1.right_tail != PARTICLES or cfg2.right_tail != PARTICLES:
        raise ValueError("partial order needs all-particle right tails (finite hole counts)")
    lo = min(cfg1.window_lo, cfg2.window_lo)
    hi = max(cfg1.window_hi, cfg2.window_hi)
    h1 = _hole_suffix_counts(cfg1, lo, hi)
    h2 = _hole_suffix_counts(cfg2, lo, hi)
    if np.any(h2 > h1):
        return False
    # below the common window the sums change by the tail species only
    if cfg2.left_tail == HOLES and cfg1.left_tail == PARTICLES:
        return False
    return True


def classify_omega(cfg: SiteConfiguration) -> Optional[int]:
    """The unique Z with ``cfg`` in Omega_Z, or None outside the union of the Omega_Z.

    ``#particles below Z - #holes at or above Z`` grows by exactly one per unit
    step of Z, so the balance point sits at ``window_lo + #holes in window``.
    """
    if cfg.left_tail != HOLES or cfg.right_tail != PARTICLES:
        return None
    return cfg.window_lo + int(cfg.occupancy.size - int(cfg.occupancy.sum()))


def discrepancy_set(cfg1: SiteConfiguration, cfg2: SiteConfiguration) -> list[int]:
    """Sites where the two configurations differ (tails must agree)."""
    if (cfg1.left_tail, cfg1.right_tail) != (cfg2.left_tail, cfg2.right_tail):
        raise ValueError("tails differ: infinitely many discrepancies")
    lo = min(cfg1.window_lo, cfg2.window_lo)
    hi = max(cfg1.window_hi, cfg2.window_hi)
    diff = cfg1.on_window(lo, hi) != cfg2.on_window(lo, hi)
    return (np.flatnonzero(diff) + lo).tolist()
