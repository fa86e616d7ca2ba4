"""Numba kernels for the graphical construction.

Clock layout
------------
Edge ``e`` is the bond ``{e, e+1}`` (absolute site index). Its ring times are a
rate-1 Poisson process built interval by interval: inside ``[m, m+1)`` the
rings are ``m + E_0``, ``m + E_0 + E_1``, ... (kept while ``< m+1``) with
``E_j = Exp(1)`` drawn from ``hash(seed, e, m, j)``. Memorylessness makes the
concatenation a Poisson process, and the first ring after any time ``s`` is
found by restarting at interval ``floor(s)``. A ring points right with
probability ``p`` (rate p) and left otherwise (rate q), decided by a second
hash of the same key. Everything is a pure function of ``(seed, e, m, j)``.

The hash is the splitmix64 finaliser applied along the key; see
:func:`splitmix64` for the constants.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

OK = 0
BOUNDARY = 1
DISCREPANCY_GREW = 2
COALESCED = 3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TAG_GAP = np.uint64(0x2545F4914F6CDD1D)
_TAG_DIR = np.uint64(0x6A09E667F3BCC909)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def splitmix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _key_uniform(seed, e, m, j, tag):
    h = splitmix64(seed ^ tag)
    h = splitmix64(h ^ np.uint64(e))
    h = splitmix64(h ^ np.uint64(m))
    h = splitmix64(h ^ np.uint64(j))
    return float(h >> np.uint64(11)) * _INV53


@njit(cache=True)
def _gap(seed, e, m, j):
    return -math.log(1.0 - _key_uniform(seed, e, m, j, _TAG_GAP))


@njit(cache=True)
def ring_is_right(seed, e, m, j, p):
    return _key_uniform(seed, e, m, j, _TAG_DIR) < p


@njit(cache=True)
def first_ring_after(seed, e, s):
    """(time, interval, index) of the first ring of edge ``e`` strictly after ``s``."""
    m = np.int64(math.floor(s))
    if m < 0:
        m = np.int64(0)
    j = np.int64(0)
    t = m + _gap(seed, e, m, j)
    while True:
        if t >= m + 1:
            m += 1
            j = 0
            t = m + _gap(seed, e, m, j)
        elif t > s:
            return t, m, j
        else:
            j += 1
            t = t + _gap(seed, e, m, j)


@njit(cache=True)
def next_ring(seed, e, m, j, t):
    j += 1
    t = t + _gap(seed, e, m, j)
    while t >= m + 1:
        m += 1
        j = 0
        t = m + _gap(seed, e, m, j)
    return t, m, j


@njit(cache=True)
def stream_seed(master, replica):
    """Stable per-replica seed: splitmix64 of the master seed mixed with the replica id."""
    return splitmix64(splitmix64(np.uint64(master)) ^ np.uint64(replica))


@njit(cache=True)
def enumerate_rings(seed, e_lo, e_hi, t0, t1, p):
    """All rings on edges ``e_lo..e_hi`` in ``(t0, t1]``, sorted by time."""
    cap = 64
    times = np.empty(cap, np.float64)
    edges = np.empty(cap, np.int64)
    dirs = np.empty(cap, np.int8)
    n = 0
    for e in range(e_lo, e_hi + 1):
        t, m, j = first_ring_after(seed, e, t0)
        while t <= t1:
            if n == cap:
                cap *= 2
                times = np.concatenate((times, np.empty(cap - n, np.float64)))
                edges = np.concatenate((edges, np.empty(cap - n, np.int64)))
                dirs = np.concatenate((dirs, np.empty(cap - n, np.int8)))
            times[n] = t
            edges[n] = e
            dirs[n] = 1 if ring_is_right(seed, e, m, j, p) else -1
            n += 1
            t, m, j = next_ring(seed, e, m, j, t)
    order = np.argsort(times[:n], kind="mergesort")
    return times[:n][order], edges[:n][order], dirs[:n][order]


@njit(cache=True)
def _pair_local_diff(occ, a, b, k):
    return (occ[a, k] != occ[b, k]) + (occ[a, k + 1] != occ[b, k + 1])


@njit(cache=True)
def _apply(occ, k, right):
    """Apply a ring at local edge k to every member; True if anything moved."""
    moved = False
    for r in range(occ.shape[0]):
        x = occ[r, k]
        y = occ[r, k + 1]
        if right:
            if x == 1 and y == 0:
                occ[r, k] = 0
                occ[r, k + 1] = 1
                moved = True
        else:
            if x == 0 and y == 1:
                occ[r, k] = 1
                occ[r, k + 1] = 0
                moved = True
    return moved


@njit(cache=True)
def _ring(occ, k, right, guard, audit, before):
    """Ring + boundary guard + optional discrepancy audit. Returns (status, moved)."""
    nm = occ.shape[0]
    if audit:
        c = 0
        for a in range(nm):
            for b in range(a + 1, nm):
                before[c] = _pair_local_diff(occ, a, b, k)
                c += 1
    moved = _apply(occ, k, right)
    if not moved:
        return OK, False
    n_sites = occ.shape[1]
    if k < guard or k + 1 >= n_sites - guard:
        return BOUNDARY, True
    if audit:
        c = 0
        for a in range(nm):
            for b in range(a + 1, nm):
                if _pair_local_diff(occ, a, b, k) > before[c]:
                    return DISCREPANCY_GREW, True
                c += 1
    return OK, True


@njit(cache=True)
def apply_events(occ, lo, times, edges, dirs, guard, audit):
    """Apply an explicit time-ordered event list (absolute edges) in place."""
    nm = occ.shape[0]
    before = np.zeros(max(1, nm * (nm - 1) // 2), np.int64)
    n_edges = occ.shape[1] - 1
    for i in range(times.shape[0]):
        k = edges[i] - lo
        if k < 0 or k >= n_edges:
            continue
        status, _ = _ring(occ, k, dirs[i] > 0, guard, audit, before)
        if status != OK:
            return status, i
    return OK, times.shape[0]


@njit(cache=True)
def evolve_eager(occ, lo, seed, p, t0, t1, guard, audit):
    """Every ring on every window edge in ``(t0, t1]``, applied in time order."""
    times, edges, dirs = enumerate_rings(seed, lo, lo + occ.shape[1] - 2, t0, t1, p)
    return apply_events(occ, lo, times, edges, dirs, guard, audit)


@njit(cache=True)
def _active(occ, k):
    for r in range(occ.shape[0]):
        if occ[r, k] != occ[r, k + 1]:
            return True
    return False


@njit(cache=True)
def _heap_push(ht, hk, n, t, k):
    i = n
    ht[i] = t
    hk[i] = k
    while i > 0:
        parent = (i - 1) >> 1
        if ht[parent] <= ht[i]:
            break
        ht[parent], ht[i] = ht[i], ht[parent]
        hk[parent], hk[i] = hk[i], hk[parent]
        i = parent
    return n + 1


@njit(cache=True)
def _heap_sift_down(ht, hk, n, i):
    while True:
        left = 2 * i + 1
        if left >= n:
            return
        small = left
        right = left + 1
        if right < n and ht[right] < ht[left]:
            small = right
        if ht[i] <= ht[small]:
            return
        ht[i], ht[small] = ht[small], ht[i]
        hk[i], hk[small] = hk[small], hk[i]
        i = small


@njit(cache=True)
def _pair_diff_total(occ):
    total = 0
    for s in range(occ.shape[1]):
        if occ[0, s] != occ[1, s]:
            total += 1
    return total


@njit(cache=True)
def evolve_lazy(occ, lo, seed, p, t0, t1, guard, audit, stop_on_coalesce):
    """Event-driven evolution touching only edges where some member can move.

    Rings on edges where every member agrees on both sites are no-ops, so they
    are skipped; when an edge becomes active at time s it resumes at its first
    ring after s. The trajectory is identical to :func:`evolve_eager`.

    Returns ``(status, events, time)``; ``time`` is the coalescence time when
    ``stop_on_coalesce`` fires (members 0 and 1 become equal), else ``t1``.
    """
    nm = occ.shape[0]
    n_edges = occ.shape[1] - 1
    before = np.zeros(max(1, nm * (nm - 1) // 2), np.int64)
    ht = np.empty(n_edges + 1, np.float64)
    hk = np.empty(n_edges + 1, np.int64)
    em = np.zeros(n_edges, np.int64)
    ej = np.zeros(n_edges, np.int64)
    queued = np.zeros(n_edges, np.bool_)
    n = 0
    events = 0

    diff = 0
    if stop_on_coalesce:
        diff = _pair_diff_total(occ)
        if diff == 0:
            return COALESCED, 0, t0

    for k in range(n_edges):
        if _active(occ, k):
            t, m, j = first_ring_after(seed, lo + k, t0)
            if t <= t1:
                em[k] = m
                ej[k] = j
                queued[k] = True
                n = _heap_push(ht, hk, n, t, k)

    while n > 0 and ht[0] <= t1:
        T = ht[0]
        k = hk[0]
        if not _active(occ, k):
            queued[k] = False
            n -= 1
            ht[0] = ht[n]
            hk[0] = hk[n]
            _heap_sift_down(ht, hk, n, 0)
            continue
        e = lo + k
        events += 1
        right = ring_is_right(seed, e, em[k], ej[k], p)
        if stop_on_coalesce:
            d_before = (occ[0, k] != occ[1, k]) + (occ[0, k + 1] != occ[1, k + 1])
        status, moved = _ring(occ, k, right, guard, audit, before)
        if status != OK:
            return status, events, T
        if moved:
            if stop_on_coalesce:
                d_after = (occ[0, k] != occ[1, k]) + (occ[0, k + 1] != occ[1, k + 1])
                diff += d_after - d_before
                if diff == 0:
                    return COALESCED, events, T
            for nb in (k - 1, k + 1):
                if 0 <= nb < n_edges and not queued[nb] and _active(occ, nb):
                    t, m, j = first_ring_after(seed, lo + nb, T)
                    if t <= t1:
                        em[nb] = m
                        ej[nb] = j
                        queued[nb] = True
                        n = _heap_push(ht, hk, n, t, nb)
        # edge k stays active after its own ring
        t, m, j = next_ring(seed, e, em[k], ej[k], T)
        if t <= t1:
            em[k] = m
            ej[k] = j
            ht[0] = t
            _heap_sift_down(ht, hk, n, 0)
        else:
            queued[k] = False
            n -= 1
            ht[0] = ht[n]
            hk[0] = hk[n]
            _heap_sift_down(ht, hk, n, 0)
    return OK, events, t1


@njit(cache=True)
def hit_target(occ, lo, seed, p, t0, t1, target, guard):
    """First ring time in ``(t0, t1]`` after which row 0 equals ``target``.

    Returns ``(COALESCED, time)`` on a hit, ``(OK, -1.0)`` if none, or a boundary
    status. ``target`` is a fixed configuration on the same window.
    """
    mism = 0
    for k in range(occ.shape[1]):
        mism += occ[0, k] != target[k]
    if mism == 0:
        return COALESCED, t0
    times, edges, dirs = enumerate_rings(seed, lo, lo + occ.shape[1] - 2, t0, t1, p)
    before = np.zeros(1, np.int64)
    for i in range(times.shape[0]):
        k = edges[i] - lo
        a0 = (occ[0, k] != target[k]) + (occ[0, k + 1] != target[k + 1])
        status, moved = _ring(occ, k, dirs[i] > 0, guard, False, before)
        if status != OK:
            return status, times[i]
        if moved:
            mism += (occ[0, k] != target[k]) + (occ[0, k + 1] != target[k + 1]) - a0
            if mism == 0:
                return COALESCED, times[i]
    return OK, -1.0
