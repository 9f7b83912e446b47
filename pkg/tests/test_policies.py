import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from uarelay.geometry import CellScenario
from uarelay.policies import (
    FadingDraw,
    PolicyKind,
    beta_cdf,
    beta_pdf,
    coop_prob_geometric,
    coop_prob_hybrid,
    decide_geometric,
    decide_hybrid,
    decide_ideal,
    ideal_mask_interference_limited,
)

# Independent mpmath evaluations (alpha = 4) of the two cooperation probabilities.
RHO2 = {1: 0.203545100351, 2: 0.277777777778, 4: 0.342768507119, 6: 0.373610513882, 1000: 0.491900056892}
RHO3 = {1: 0.195588094661, 2: 0.263707638545, 4: 0.327030603082, 6: 0.358982412653, 1000: 0.491653055891}


def test_policy_parse():
    assert PolicyKind.parse("E3") is PolicyKind.HYBRID
    assert PolicyKind.parse("geometric") is PolicyKind.GEOMETRIC
    with pytest.raises(ValueError):
        PolicyKind.parse("e4")


def test_geometric_examples():
    assert decide_geometric(CellScenario(100.0, 40.0, 0.0)).cooperate
    for psi in np.linspace(0, 2 * math.pi, 9):
        assert not decide_geometric(CellScenario(100.0, 120.0, psi)).cooperate
    assert not decide_geometric(CellScenario(100.0, 90.0, math.pi / 2)).cooperate


def test_hybrid_examples():
    assert decide_hybrid(CellScenario(100.0, 60.0, 0.3), FadingDraw(1.3, 1.3), 4.0).cooperate
    assert not decide_hybrid(CellScenario(100.0, 80.0, 0.0), FadingDraw(4.0, 1.0), 4.0).cooperate
    assert not decide_hybrid(CellScenario(100.0, 90.0, math.pi / 2), FadingDraw(0.01, 100.0), 4.0).cooperate
    # relay on top of the source: infinitely strong relay link
    assert decide_hybrid(CellScenario(100.0, 0.0, 0.0), FadingDraw(5.0, 0.1), 4.0).cooperate


def test_ideal_examples():
    assert decide_ideal(1e-9, 1e-9).cooperate
    assert decide_ideal(2e-9, 1e-9).cooperate
    assert not decide_ideal(1e-9, 2e-9).cooperate
    a = 4.0
    assert decide_ideal(1.0 * 50.0**-a, 1.0 * 100.0**-a).cooperate
    with pytest.raises(ValueError):
        decide_ideal(float("nan"), 1.0)


def test_ideal_interference_limited_form():
    # g_sr r2^-a / Q_r >= g_sd r1^-a / Q_d
    assert ideal_mask_interference_limited(1.0, 50.0, 2.0, 1.0, 100.0, 1.0, 4.0)
    assert not ideal_mask_interference_limited(1.0, 90.0, 2.0, 1.0, 100.0, 1.0, 4.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(0, 1e3), st.floats(0, 2 * math.pi), st.floats(1e-3, 1e2), st.floats(2.1, 6))
def test_hybrid_with_equal_gains_is_geometric(r1, r2, psi, g, alpha):
    s = CellScenario(r1, r2, psi)
    assert decide_hybrid(s, FadingDraw(g, g), alpha).cooperate == decide_geometric(s).cooperate


def test_beta_law():
    for a in (2.5, 3.0, 4.0, 5.0):
        assert beta_cdf(1.0, a) == pytest.approx(0.5)
        assert beta_cdf(0.0, a) == 0.0
        total, _ = integrate.quad(beta_pdf, 0, np.inf, args=(a,))
        assert total == pytest.approx(1.0, abs=1e-8)
    assert beta_pdf(1.0, 4.0) == pytest.approx(1.0)


def test_beta_law_matches_fading_ratio(rng):
    g = rng.exponential(size=(2, 200_000))
    beta = (g[0] / g[1]) ** 0.25
    for z in (0.5, 1.0, 1.7):
        assert np.mean(beta <= z) == pytest.approx(beta_cdf(z, 4.0), abs=4e-3)


def test_coop_prob_zero_density():
    assert coop_prob_geometric(1.0, 0.0) == 0.0
    assert coop_prob_hybrid(1.0, 0.0, 4.0) == 0.0


@pytest.mark.parametrize("ratio", sorted(RHO2))
def test_coop_prob_oracles(ratio):
    assert coop_prob_geometric(1.0, float(ratio)) == pytest.approx(RHO2[ratio], abs=1e-9)
    assert coop_prob_hybrid(1.0, float(ratio), 4.0) == pytest.approx(RHO3[ratio], abs=1e-9)


def test_coop_prob_geometric_closed_form():
    # lambda2 = lambda1: 1/6 plus (2/pi) int_{pi/3}^{pi/2} 2cos^2 / (1 + 4cos^2)
    f = lambda p: 2 * math.cos(p) ** 2 / (math.pi * (1 + 4 * math.cos(p) ** 2))
    wings, _ = integrate.quad(f, math.pi / 3, math.pi / 2)
    assert coop_prob_geometric(1.0, 1.0) == pytest.approx(2 * wings + 1 / 6, abs=1e-12)


def test_coop_prob_limits_and_monotonicity():
    ratios = [0.1, 0.5, 1, 2, 4, 6, 10, 100, 1e4]
    r2 = [coop_prob_geometric(1.0, r) for r in ratios]
    r3 = [coop_prob_hybrid(1.0, r, 4.0) for r in ratios]
    assert np.all(np.diff(r2) >= 0) and np.all(np.diff(r3) >= 0)
    assert max(r2 + r3) <= 0.5
    assert r2[-1] == pytest.approx(0.5, abs=5e-3) and r3[-1] == pytest.approx(0.5, abs=5e-3)


@pytest.mark.parametrize("ratio", [1, 2, 4, 6])
def test_policies_have_close_probabilities(ratio):
    assert abs(coop_prob_geometric(1.0, ratio) - coop_prob_hybrid(1.0, ratio, 4.0)) < 0.02


def test_printed_variant_overestimates():
    assert coop_prob_hybrid(1.0, 1.0, 4.0, printed_form=True) == pytest.approx(0.21397, abs=1e-4)
    assert coop_prob_hybrid(1.0, 1.0, 4.0, printed_form=True) > coop_prob_hybrid(1.0, 1.0, 4.0)


def test_coop_prob_hybrid_by_direct_sampling(rng):
    n = 400_000
    r1 = rng.rayleigh(1 / math.sqrt(2 * math.pi), n)
    r2 = rng.rayleigh(1 / math.sqrt(2 * math.pi), n)
    psi = rng.uniform(0, 2 * math.pi, n)
    g = rng.exponential(size=(2, n))
    d = np.sqrt(r1**2 + r2**2 - 2 * r1 * r2 * np.cos(psi))
    hit = (g[0] * r2**4 <= g[1] * r1**4) & (d <= r1)
    se = math.sqrt(RHO3[1] * (1 - RHO3[1]) / n)
    assert abs(hit.mean() - RHO3[1]) < 3 * se
