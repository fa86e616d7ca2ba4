import numpy as np
import pytest

from asepkpz.hydro import (burgers_profile, default_bandwidth, godunov, l1_distance,
                           smoothed_density, DensityEstimate)


@pytest.mark.parametrize("p", [0.6, 0.8, 1.0])
def test_profile_closed_form(p):
    g = 2 * p - 1
    xi = np.array([-1.5 * g, -g, -0.5 * g, -1e-9, 0.0, 0.5 * g, g, 1.5 * g])
    want = [0.75, 0.5, 0.25, 0.0, 1.0, 0.75, 0.5, 0.25]
    assert np.allclose(burgers_profile(xi, p), want, atol=1e-8)
    assert burgers_profile(-2.5 * g, p) == 1.0 and burgers_profile(2.5 * g, p) == 0.0


def test_profile_mass_balance():
    # total mass on [-3g, 3g] is conserved from theta=0 (datum) to theta=1
    p = 0.8
    g = 2 * p - 1
    xi = np.linspace(-3 * g, 3 * g, 600001)
    mass = np.trapezoid(burgers_profile(xi, p), xi)
    assert abs(mass - 3 * g) <= 1e-4


def test_godunov_matches_profile():
    p = 0.8
    x, u = godunov(p, dx=2e-3)
    m = np.abs(x) <= 1.2 * (2 * p - 1)
    l1 = np.sum(np.abs(u[m] - burgers_profile(x[m], p))) * (x[1] - x[0])
    assert l1 <= 0.01


def test_profile_theta_range():
    with pytest.raises(ValueError):
        burgers_profile(0.0, 0.8, theta=1.5)


def test_l1_of_exact_profile_is_small():
    p, t = 0.8, 500.0
    j = np.arange(-600, 601)
    rows = np.tile(burgers_profile(j / t, p), (3, 1))
    est = smoothed_density(rows, -600, t, 1e-6)
    assert l1_distance(est, p) <= 2 / t
    assert isinstance(est, DensityEstimate) and est.replicas == 3


def test_bandwidth_rule():
    assert default_bandwidth(4.0) == 2.0
    assert default_bandwidth(400.0) == 10.0
