import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from uarelay.geometry import (
    Annulus,
    CellScenario,
    Disk,
    NetworkConfig,
    NoRelayCandidate,
    PlacementError,
    Rect,
    distance_cdf,
    distance_pdf,
    nearest_idle,
    place_base_stations,
    relay_to_bs_distance,
    sample_ppp,
    sample_realization,
    simulate_link_distances,
)

from .conftest import LAMBDA1


def test_config_defaults_and_validation():
    cfg = NetworkConfig(LAMBDA1, 0.0)
    assert cfg.cell_radius == pytest.approx(300.0)
    assert cfg.p_r == cfg.p_s
    assert cfg.alpha1 + cfg.alpha2 == 1.0
    assert cfg.r_max == pytest.approx(300.0 * 1000**0.5)
    for bad in (dict(lambda1=0.0, lambda2=0.0), dict(lambda1=LAMBDA1, lambda2=-1.0),
                dict(lambda1=LAMBDA1, lambda2=0.0, alpha=2.0), dict(lambda1=LAMBDA1, lambda2=0.0, rho1=0.6),
                dict(lambda1=LAMBDA1, lambda2=0.0, alpha1=1.0), dict(lambda1=LAMBDA1, lambda2=0.0, noise_power=-1)):
        with pytest.raises(ValueError):
            NetworkConfig(**bad)


def test_ppp_null_process(rng):
    assert sample_ppp(0.0, Disk(100.0), rng).shape == (0, 2)


def test_ppp_rejects_bad_input(rng):
    with pytest.raises(ValueError):
        sample_ppp(float("nan"), Disk(1.0), rng)
    with pytest.raises(ValueError):
        Disk(0.0)
    with pytest.raises(ValueError):
        Annulus(5.0, 5.0)


@pytest.mark.parametrize("intensity, radius", [(1e-4, 1000.0), (LAMBDA1, 3000.0)])
def test_ppp_mean_count(rng, intensity, radius):
    n = 10_000
    counts = np.array([len(sample_ppp(intensity, Disk(radius), rng)) for _ in range(n)])
    expected = intensity * math.pi * radius**2
    assert abs(counts.mean() - expected) < 3 * math.sqrt(expected / n)


def test_ppp_expected_counts_frozen():
    assert 1e-4 * math.pi * 1000.0**2 == pytest.approx(314.159, abs=1e-3)
    assert LAMBDA1 * math.pi * 3000.0**2 == pytest.approx(78.54, abs=1e-2)


def test_ppp_points_uniform_in_window(rng):
    pts = np.concatenate([sample_ppp(1e-3, Annulus(10.0, 50.0), rng) for _ in range(200)])
    r = np.hypot(*pts.T)
    assert r.min() >= 10.0 and r.max() <= 50.0
    # radial CDF on an annulus: (r^2 - a^2) / (b^2 - a^2)
    ks = stats.kstest(r, lambda x: (x**2 - 100.0) / (2500.0 - 100.0))
    assert ks.pvalue > 1e-3


def test_ppp_quadrant_counts_independent(rng):
    window = Rect(-1.0, 1.0, -1.0, 1.0)
    table = np.zeros((2, 2), dtype=int)
    low = 25
    for _ in range(4000):
        pts = sample_ppp(50.0 / window.area, window, rng)
        a = np.sum((pts[:, 0] < 0) & (pts[:, 1] < 0)) >= low / 2
        b = np.sum((pts[:, 0] > 0) & (pts[:, 1] > 0)) >= low / 2
        table[int(a), int(b)] += 1
    assert stats.chi2_contingency(table).pvalue > 1e-3


def test_bs_single_user_uniform_over_window(rng):
    window = Rect(0.0, 4.0, 0.0, 2.0)
    pts = np.array([place_base_stations(np.array([[0.0, 0.0]]), window, rng)[0] for _ in range(10_000)])
    se = np.array([4.0, 2.0]) / math.sqrt(12 * len(pts))
    assert np.all(np.abs(pts.mean(axis=0) - window.centroid) < 3 * se)


def test_bs_two_users_voronoi_membership(rng):
    users = np.array([[-5.0, 0.0], [5.0, 0.0]])
    for _ in range(500):
        bs = place_base_stations(users, Disk(20.0), rng)
        assert bs[0, 0] < 0 < bs[1, 0]


def test_bs_voronoi_property_on_realization(net, rng):
    real = sample_realization(net, Disk(1500.0), rng)
    assert len(real.base_stations) == len(real.active_users)
    d = np.linalg.norm(real.base_stations[:, None, :] - real.active_users[None, :, :], axis=2)
    assert np.array_equal(d.argmin(axis=1), np.arange(len(real.active_users)))
    assert np.all(real.g_sd > 0) and np.all((real.theta_s >= 0) & (real.theta_s < 2 * np.pi))


def test_bs_retry_budget_is_loud(rng):
    # the second user's cell misses the window entirely
    users = np.array([[0.0, 0.0], [100.0, 0.0]])
    with pytest.raises(PlacementError):
        place_base_stations(users, Disk(1.0), rng, max_draws=10_000)


def test_nearest_idle_examples():
    pt, d, k = nearest_idle((0.0, 0.0), [(3.0, 4.0), (1.0, 0.0)])
    assert tuple(pt) == (1.0, 0.0) and d == 1.0 and k == 1
    pt, d, k = nearest_idle((0.0, 0.0), [(2.0, 0.0), (0.0, 2.0)])
    assert tuple(pt) == (2.0, 0.0) and d == 2.0 and k == 0
    with pytest.raises(NoRelayCandidate):
        nearest_idle((0.0, 0.0), [])


def test_relay_distance_examples():
    assert relay_to_bs_distance(3.0, 4.0, math.pi / 2) == pytest.approx(5.0)
    assert relay_to_bs_distance(7.0, 0.0, 1.234) == pytest.approx(7.0)
    # independent evaluation: sqrt(260^2 + 104^2 - 2*260*104*cos(pi/6))
    assert relay_to_bs_distance(260.0, 104.0, math.pi / 6) == pytest.approx(177.711412586073, rel=1e-12)
    with pytest.raises(ValueError):
        relay_to_bs_distance(-1.0, 1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(-10, 10))
def test_relay_distance_symmetry_and_triangle(r1, r2, psi):
    d = relay_to_bs_distance(r1, r2, psi)
    assert d == pytest.approx(relay_to_bs_distance(r1, r2, -psi), abs=1e-9)
    tol = 1e-9 * (r1 + r2) + 1e-6
    assert abs(r1 - r2) - tol <= d <= r1 + r2 + tol


def test_cell_scenario_geometry():
    s = CellScenario(100.0, 40.0, 0.0)
    assert s.d_relay_bs == pytest.approx(60.0)
    assert np.linalg.norm(s.relay_xy) == pytest.approx(60.0)
    assert np.linalg.norm(s.relay_xy - s.source_xy) == pytest.approx(40.0)
    with pytest.raises(ValueError):
        CellScenario(0.0, 1.0)


def test_distance_pdf_properties(net):
    assert distance_pdf("direct", 0.0, net) == 0.0
    for which, lam in (("direct", net.lambda1), ("cooperation", net.lambda2)):
        total, _ = integrate.quad(lambda r: distance_pdf(which, r, net), 0, np.inf)
        assert total == pytest.approx(1.0, abs=1e-8)
        mode = 1.0 / math.sqrt(2 * math.pi * lam)
        h = 1e-3 * mode
        assert distance_pdf(which, mode, net) > distance_pdf(which, mode - h, net)
        assert distance_pdf(which, mode, net) > distance_pdf(which, mode + h, net)
    assert distance_cdf("direct", 300.0, net) == pytest.approx(1 - math.exp(-math.pi / 4))
    with pytest.raises(ValueError):
        distance_pdf("sideways", 1.0, net)


def test_link_distances_from_ppp_layouts(net, rng):
    r1, r2 = simulate_link_distances(net, 2000, rng)
    assert len(r1) == len(r2) == 20_000
    # n = 2e4: the 1% critical KS value is about 0.0115
    assert stats.kstest(r1, lambda r: distance_cdf("direct", r, net)).statistic < 0.0115
    assert stats.kstest(r2, lambda r: distance_cdf("cooperation", r, net)).statistic < 0.0115
