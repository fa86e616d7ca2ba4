import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asepkpz.blocking import (BlockingQuery, SamplingError, fit_decay, mu_marginal, mu_Z,
                              mu_Z_brute, mu_Z_cylinder, omega_atom, sample_mu_Z,
                              sample_mu_Z_batch, tail_bound)
from asepkpz.dynamics import ClockStream, CoupledEnsemble, evolve_lazy, replica_seed
from asepkpz.lattice import classify_omega

from oracles import mu_Z_enumerate

A_FAMILY = [A for k in range(3) for A in itertools.combinations(range(-2, 3), k)]


def test_marginal_examples():
    assert mu_marginal(0, 0.8) == 0.5
    assert math.isclose(mu_marginal(1, 2 / 3), 2 / 3)
    assert math.isclose(mu_marginal(-1, 2 / 3), 1 / 3)
    assert mu_marginal(-2000, 0.8) == 0.0 and mu_marginal(2000, 0.8) == 1.0
    with pytest.raises(ValueError):
        mu_marginal(0, 0.5)


def test_empty_cylinder_is_one():
    assert mu_Z_cylinder(BlockingQuery(3, ()), 0.8)[0] == 1.0


def test_query_window_check():
    with pytest.raises(ValueError):
        BlockingQuery(0, (5,), W=10)
    BlockingQuery(0, (5,), W=13)
    BlockingQuery(0, (2,), W=6, strict=False)
    assert BlockingQuery(0, (2, 1, 2)).A == (1, 2)


def test_matches_plain_enumeration():
    p, W = 0.8, 6
    for A in A_FAMILY:
        q = BlockingQuery(0, A, W, strict=False)
        v = mu_Z_cylinder(q, p)[0]
        assert abs(v - mu_Z_enumerate(0, A, p, W)) <= 1e-10
        assert abs(v - mu_Z_brute(0, A, p, W)) <= 1e-10


@pytest.mark.parametrize("n", range(11))
def test_reflection_identity(n):
    assert abs(mu_Z(0, [n], 0.8) + mu_Z(0, [-n - 1], 0.8) - 1) <= 1e-9


def test_monotone_in_Z_and_shift_identity():
    p = 0.8
    bound = tail_bound(40, p)
    for A in A_FAMILY:
        for Z in range(-5, 5):
            assert mu_Z(Z, A, p) >= mu_Z(Z + 1, A, p) - 1e-12
        for Z in range(-5, 6):
            for n in range(-5, 6):
                lhs = mu_Z(Z, [a + n for a in A], p)
                assert abs(lhs - mu_Z(Z - n, A, p)) <= max(2 * bound, 1e-12)


def test_exponential_decay():
    p = 0.8
    tails = [1 - mu_Z(0, [n], p) for n in range(5, 16)]
    assert all(b < a for a, b in zip(tails, tails[1:]))
    slope, _ = fit_decay(p)
    target = math.log((1 - p) / p)
    assert abs(slope - target) <= 0.25 * abs(target)


@given(st.integers(-6, 6), st.sets(st.integers(-4, 4), max_size=3), st.floats(0.6, 0.95))
def test_cylinder_is_probability(Z, A, p):
    v, err = mu_Z_cylinder(BlockingQuery(Z, tuple(A)), p)
    assert -1e-12 <= v <= 1 + 1e-12
    assert err >= 0
    # adding a site can only shrink the cylinder
    bigger = mu_Z(Z, tuple(A) + (Z + 3,), p)
    assert bigger <= v + 1e-12


def test_sampler_in_omega_and_marginals():
    p, Z = 0.8, 1
    batch = sample_mu_Z_batch(Z, 100000, p, W=20, seed=5)
    for k in range(0, 100000, 9973):
        assert classify_omega(batch.config(k)) == Z
    assert batch.acceptance >= 0.5 * batch.atom
    for i in range(Z - 3, Z + 4):
        col = batch.occupancy[:, i - batch.window_lo]
        se = col.std() / math.sqrt(col.size)
        assert abs(col.mean() - mu_Z(Z, [i], p)) <= 3 * se + 1e-12


def test_sampler_shift_equivariance():
    p = 0.8
    a = sample_mu_Z_batch(2, 40000, p, W=20, seed=1)
    b = sample_mu_Z_batch(0, 40000, p, W=20, seed=2)
    # mu_2 shifted by 2 is mu_0: compare the site marginals of the shifted sample with mu_0 draws
    for i in range(-3, 4):
        x = a.occupancy[:, i + 2 - a.window_lo].astype(float)
        y = b.occupancy[:, i - b.window_lo].astype(float)
        se = math.sqrt(x.var() / x.size + y.var() / y.size)
        assert abs(x.mean() - y.mean()) <= 3 * se + 1e-12


def test_single_sample_and_cap():
    cfg = sample_mu_Z(0, 20, 0.8, seed=3)
    assert classify_omega(cfg) == 0
    with pytest.raises(SamplingError):
        sample_mu_Z_batch(30, 10, 0.8, W=40, max_draws=1000, chunk=500)
    assert 0 < omega_atom(0, 40, 0.8) < 1


def test_stationarity_under_dynamics():
    p, Z, n = 0.8, 0, 3000
    batch = sample_mu_Z_batch(Z, n, p, W=30, seed=7)
    final = np.empty((n, 7), np.uint8)
    for k in range(n):
        cfg = batch.config(k).rewindow(-120, 120)
        ens = CoupledEnsemble.from_members([cfg], ClockStream(replica_seed(12, k), p))
        ens = evolve_lazy(ens, 50.0)
        final[k] = ens.occ[0, 120 - 3:120 + 4]
    for A in ((0,), (-1,), (0, 1), (-2, 2)):
        hits = np.all(final[:, [a + 3 for a in A]] == 1, axis=1)
        se = math.sqrt(max(hits.mean() * (1 - hits.mean()), 1e-12) / n)
        assert abs(hits.mean() - mu_Z(Z, A, p)) <= 3 * se
