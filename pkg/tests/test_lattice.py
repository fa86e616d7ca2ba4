import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asepkpz.lattice import (HOLES, PARTICLES, SiteConfiguration, classify_omega,
                             cylinder_indicator, discrepancy_set, parse, partial_order_leq,
                             reversed_step, shift)
from asepkpz.scenario import ScenarioParams, make_eta1, make_eta2_eta


def omega_cfg(lo, bits):
    return SiteConfiguration(lo, np.array(bits, dtype=np.uint8), HOLES, PARTICLES)


configs = st.builds(
    lambda lo, bits, lt, rt: SiteConfiguration(lo, np.array(bits, np.uint8), lt, rt),
    st.integers(-20, 20), st.lists(st.integers(0, 1), min_size=1, max_size=12),
    st.integers(0, 1), st.integers(0, 1))
omega_configs = st.builds(omega_cfg, st.integers(-20, 20),
                          st.lists(st.integers(0, 1), min_size=1, max_size=12))


def test_cylinder_examples():
    s0 = reversed_step(0)
    assert cylinder_indicator(s0, {0, 5}) == 1
    assert cylinder_indicator(s0, {-1}) == 0
    assert cylinder_indicator(parse("empty"), []) == 1


def test_shift_examples():
    for Z in (-3, 0, 4):
        for n in (-2, 0, 5):
            assert shift(reversed_step(Z), n) == reversed_step(Z - n)
    c = parse("ones:{-2,3}")
    assert shift(c, 0) == c


def test_shift_cylinder_bruteforce():
    rng = np.random.default_rng(0)
    for _ in range(50):
        cfg = SiteConfiguration(0, rng.integers(0, 2, 10), HOLES, HOLES)
        n = int(rng.integers(-5, 6))
        for A in itertools.combinations(range(-3, 13), 2):
            assert cylinder_indicator(shift(cfg, n), A) == cylinder_indicator(cfg, [a + n for a in A])


def test_order_examples():
    s0, s1 = reversed_step(0), reversed_step(1)
    assert not partial_order_leq(s0, s1)
    assert partial_order_leq(s1, s0)
    c = omega_cfg(-3, [0, 1, 0, 0, 1])
    Z = classify_omega(c)
    assert partial_order_leq(c, reversed_step(Z))
    assert partial_order_leq(c, c)
    with pytest.raises(ValueError):
        partial_order_leq(parse("ones:{0}"), s0)


def test_classify_examples():
    assert classify_omega(reversed_step(3)) == 3
    assert classify_omega(parse("ones:{-2} + ones:>=1")) == 0
    assert classify_omega(parse("ones:{0..3}")) is None
    assert classify_omega(parse("ones:<0")) is None


def test_discrepancy_examples():
    pr = ScenarioParams(p=0.8, t=100.0)
    e1, e2 = make_eta2_eta(pr)
    assert discrepancy_set(e1, e2) == [0]
    assert discrepancy_set(e1, make_eta1(pr)) == []
    assert discrepancy_set(reversed_step(4), reversed_step(5)) == [4]
    with pytest.raises(ValueError):
        discrepancy_set(reversed_step(0), parse("ones:{0}"))


def test_parse_grammar():
    c = parse("ones:<-3 + ones:{0..2} + ones:{7}")
    assert (c.left_tail, c.right_tail) == (PARTICLES, HOLES)
    assert [c[j] for j in range(-5, 9)] == [1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 0]
    assert parse("ones:>=2@-4..6") == reversed_step(2)
    with pytest.raises(ValueError):
        parse("ones:{5}@0..3")
    with pytest.raises(ValueError):
        parse("twos:{1}")


def test_configuration_validation():
    with pytest.raises(ValueError):
        SiteConfiguration(0, [0, 2])
    with pytest.raises(ValueError):
        SiteConfiguration(0, [])
    with pytest.raises(ValueError):
        SiteConfiguration(0, [1], left_tail=3)


@given(omega_configs, st.integers(-30, 30))
def test_classify_shift_property(cfg, n):
    assert classify_omega(shift(cfg, n)) == classify_omega(cfg) - n


@given(omega_configs)
def test_classify_matches_definition(cfg):
    Z = classify_omega(cfg)
    lo, hi = cfg.window_lo - 2, cfg.window_hi + 2
    j = np.arange(lo, hi + 1)
    v = cfg.values(j)
    assert int(v[j < Z].sum()) == int((1 - v[j >= Z]).sum())


@given(configs, st.sets(st.integers(-25, 25), max_size=4), st.sets(st.integers(-25, 25), max_size=4))
def test_cylinder_union_is_and(cfg, A, B):
    assert cylinder_indicator(cfg, A | B) == (cylinder_indicator(cfg, A) & cylinder_indicator(cfg, B))


@given(configs)
def test_rewindow_and_trim_preserve_element(cfg):
    assert cfg.rewindow(cfg.window_lo - 3, cfg.window_hi + 4) == cfg
    assert cfg.trimmed() == cfg
    assert hash(cfg.trimmed()) == hash(cfg.rewindow(cfg.window_lo - 1, cfg.window_hi + 1))


def test_order_is_partial_order_on_omega():
    # all configurations of an 8-site window with holes left, particles right, grouped by Omega_Z
    cfgs = [omega_cfg(0, bits) for bits in itertools.product((0, 1), repeat=8)]
    groups = {}
    for c in cfgs:
        groups.setdefault(classify_omega(c), []).append(c)
    for Z, g in groups.items():
        leq = np.array([[partial_order_leq(a, b) for b in g] for a in g])
        assert leq.diagonal().all()
        assert not np.any(leq & leq.T & ~np.eye(len(g), dtype=bool))  # antisymmetry
        # transitivity: leq @ leq implies leq
        two = (leq.astype(int) @ leq.astype(int)) > 0
        assert not np.any(two & ~leq)
        top = reversed_step(Z)
        assert all(partial_order_leq(c, top) for c in g)
