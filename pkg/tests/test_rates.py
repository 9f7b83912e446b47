import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uarelay.geometry import CellScenario
from uarelay.interference import PowerProfile
from uarelay.policies import PolicyKind
from uarelay.rates import (
    EquivalentChannels,
    FixedDistances,
    _split_rate,
    analytic_rate_samples,
    average_rate,
    direct_rate,
    equivalent_channels,
    optimal_split,
    optimize_power_split,
    pdf_rate,
    pdf_terms,
)


def _ch(sr, sd_b, sd_m, rd):
    return EquivalentChannels(sr, sd_b, sd_m, rd)


def test_equivalent_channel_examples():
    ch = equivalent_channels(2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 1.0)
    assert float(ch.h_sr_eq) == 2.0
    ch = equivalent_channels(2.0, 2.0, 2.0, 3.0, 3.0, 1.0, 1.0)
    assert float(ch.h_sr_eq) == 0.5 and float(ch.h_sd_b_eq) == 0.5 and float(ch.h_sd_m_eq) == 1.0
    with pytest.raises(ValueError):
        equivalent_channels(1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)


def test_pdf_rate_examples():
    zero = PowerProfile(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert pdf_rate(_ch(1.0, 1.0, 1.0, 1.0), zero).rate == 0.0
    # no relay-destination link and no common codeword: at most the direct rate
    alloc = PowerProfile(1.0, 1.0, 1.0, 0.0, 1.0, 2.0)
    ch = _ch(5.0, 0.7, 0.4, 0.0)
    assert pdf_rate(ch, alloc).rate <= direct_rate(ch, 1.0, 0.5).rate + 1e-12
    c1, c2, c3 = pdf_terms(ch, 1.0, 0.0, 1.0, 2.0, 0.5)
    assert float(c3) == pytest.approx(direct_rate(ch, 1.0, 0.5).rate)


def test_direct_rate_examples():
    assert direct_rate(_ch(0.0, 1.0, 1.0, 0.0), 1.0, 0.5).rate == pytest.approx(1.0)
    assert direct_rate(_ch(0.0, 3.0, 3.0, 0.0), 0.0, 0.5).rate == 0.0
    assert direct_rate(_ch(0.0, 3.0, 3.0, 0.0), 1.0, 0.3).rate == pytest.approx(math.log2(4.0))


gains = st.floats(0.0, 1e3)


@settings(max_examples=200, deadline=None)
@given(gains, gains, gains, gains, st.floats(0.0, 1.0))
def test_pdf_min_structure(sr, sdb, sdm, rd, t):
    alloc = PowerProfile.equal_phase(1.0, 1.0, 0.5, t)
    res = pdf_rate(_ch(sr, sdb, sdm, rd), alloc)
    c1, c2, c3 = res.components
    assert res.rate <= c1 + c2 + 1e-12 and res.rate <= c3 + 1e-12
    assert res.rate in (c1 + c2, c3)


@settings(max_examples=200, deadline=None)
@given(gains, gains, gains, gains, st.sampled_from(range(4)), st.floats(1.0, 10.0), st.floats(0.0, 1.0))
def test_pdf_rate_monotone_in_gains(sr, sdb, sdm, rd, which, factor, t):
    alloc = PowerProfile.equal_phase(1.0, 1.0, 0.5, t)
    base = [sr, sdb, sdm, rd]
    bigger = list(base)
    bigger[which] *= factor
    assert pdf_rate(_ch(*bigger), alloc).rate >= pdf_rate(_ch(*base), alloc).rate - 1e-12


def test_optimizer_without_relay_link_is_private_only():
    t, r = optimal_split(_ch(4.0, 1.0, 1.0, 0.0), 1.0, 1.0, 0.5)
    assert float(t[0]) == 0.0
    alloc = optimize_power_split(_ch(4.0, 1.0, 1.0, 0.0), 1.0, 1.0, 0.5)
    assert alloc.p_s_m1 == 0.0


def test_optimizer_strong_relay_beats_direct():
    ch = _ch(1e9, 0.5, 0.5, 2.0)
    _, r = optimal_split(ch, 1.0, 1.0, 0.5)
    assert float(r[0]) >= direct_rate(ch, 1.0, 0.5).rate


def test_optimizer_against_dense_grid(rng):
    n = 5000
    ch = _ch(*rng.exponential(size=(4, n)) * np.array([[3.0], [1.0], [0.5], [2.0]]))
    t, best = optimal_split(ch, 1.0, 1.0, 0.5)
    grid = np.linspace(0.0, 1.0, 10_001)
    col = EquivalentChannels(*(np.asarray(getattr(ch, f))[:, None] for f in ch.__dataclass_fields__))
    brute = _split_rate(col, grid[None, :], 1.0, 2.0, 0.5).max(axis=1)
    assert np.all(best >= brute - 1e-6)
    assert np.all((t >= 0) & (t <= 1))


def test_average_rate_without_cooperation_is_direct(net, rng):
    est = average_rate(None, net, FixedDistances(200.0, 50.0), 5000, rng)
    assert est.coop_fraction == 0.0
    rates, coop = analytic_rate_samples(None, net, FixedDistances(200.0, 50.0), 5000, np.random.default_rng(1))
    assert not coop.any()


def test_average_rate_colocated_relay(net, rng):
    # relay on top of the source: h_sr is infinite, C1 never binds
    scen = CellScenario(250.0, 0.0, 0.0)
    rates, coop = analytic_rate_samples(PolicyKind.GEOMETRIC, net, scen, 2000, rng)
    assert coop.all()
    direct, _ = analytic_rate_samples(None, net, scen, 2000, np.random.default_rng(5))
    assert rates.mean() > direct.mean()


def test_average_rate_validation(net, rng):
    with pytest.raises(ValueError):
        average_rate(PolicyKind.HYBRID, net, FixedDistances(100.0, 20.0), 0, rng)
    with pytest.raises(ValueError):
        average_rate(PolicyKind.HYBRID, net, FixedDistances(100.0, 20.0), 10, rng, path="magic")


def test_average_rate_reproducible(net):
    a = average_rate("e3", net, FixedDistances(260.0, 100.0), 3000, np.random.default_rng(3))
    b = average_rate("e3", net, FixedDistances(260.0, 100.0), 3000, np.random.default_rng(3))
    assert a == b
    assert 0 < a.coop_fraction < 1 and a.stderr > 0
