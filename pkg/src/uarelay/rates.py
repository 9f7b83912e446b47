"""Achievable rates of PDF relaying and direct transmission (bits/use).

All rate functions broadcast over numpy arrays so the Monte Carlo paths can
evaluate many draws at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .geometry import CellScenario, relay_to_bs_distance, sample_distance
from .interference import (
    PowerProfile,
    gamma_fit,
    gamma_ppf,
    moments_destination,
    relay_moment_table,
    zeta_coefficients,
)
from .policies import PolicyKind, geometric_mask, hybrid_mask, ideal_mask, network_rho1

GRID_POINTS = 101
REFINE_RESOLUTION = 1e-6
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class EquivalentChannels:
    """Link power gains normalised by interference-plus-noise at the receiver."""

    h_sr_eq: np.ndarray | float
    h_sd_b_eq: np.ndarray | float
    h_sd_m_eq: np.ndarray | float
    h_rd_eq: np.ndarray | float


@dataclass(frozen=True)
class RateResult:
    rate: float
    mode: str
    components: tuple


@dataclass(frozen=True)
class RateEstimate:
    mean: float
    stderr: float
    coop_fraction: float
    n: int


def equivalent_channels(sr_gain, sd_gain, rd_gain, q_r, q_d_b, q_d_m, sigma2):
    """Fold interference into the channels: gain / (Q + sigma^2) per receiver."""
    den_r = np.asarray(q_r, dtype=float) + sigma2
    den_b = np.asarray(q_d_b, dtype=float) + sigma2
    den_m = np.asarray(q_d_m, dtype=float) + sigma2
    for den in (den_r, den_b, den_m):
        if np.any(den <= 0):
            raise ValueError("interference plus noise must be positive at every receiver")
    with np.errstate(invalid="ignore"):
        # an infinite relay interference (no relay model) silences the link
        h_sr = np.where(np.isinf(den_r), 0.0, np.asarray(sr_gain) / den_r)
    return EquivalentChannels(
        h_sr_eq=h_sr,
        h_sd_b_eq=np.asarray(sd_gain) / den_b,
        h_sd_m_eq=np.asarray(sd_gain) / den_m,
        h_rd_eq=np.asarray(rd_gain) / den_m,
    )


def pdf_terms(ch, p_s_b, p_s_m1, p_s_m2, p_r_m, alpha1):
    """(C1, C2, C3) of partial decode-and-forward; broadcasts."""
    alpha2 = 1.0 - alpha1
    with np.errstate(invalid="ignore"):
        c1 = alpha1 * np.log2(1 + ch.h_sr_eq * p_s_b)
        c1 = np.where(np.asarray(p_s_b) > 0, c1, 0.0)
    c2 = alpha2 * np.log2(1 + ch.h_sd_m_eq * p_s_m2)
    coherent = (np.sqrt(ch.h_sd_m_eq * p_s_m1) + np.sqrt(ch.h_rd_eq * p_r_m)) ** 2
    c3 = alpha1 * np.log2(1 + ch.h_sd_b_eq * p_s_b) + alpha2 * np.log2(1 + ch.h_sd_m_eq * p_s_m2 + coherent)
    return c1, c2, c3


def pdf_rate(channels, alloc):
    c1, c2, c3 = pdf_terms(channels, alloc.p_s_b, alloc.p_s_m1, alloc.p_s_m2, alloc.p_r_m, alloc.alpha1)
    rate = np.minimum(c1 + c2, c3)
    return RateResult(float(rate), "relayed", (float(c1), float(c2), float(c3)))


def direct_terms(ch, p_s, alpha1):
    return alpha1 * np.log2(1 + ch.h_sd_b_eq * p_s), (1 - alpha1) * np.log2(1 + ch.h_sd_m_eq * p_s)


def direct_rate(channels, p_s, alpha1):
    if p_s < 0:
        raise ValueError("p_s must be non-negative")
    a, b = direct_terms(channels, p_s, alpha1)
    return RateResult(float(a + b), "direct", (float(a), float(b)))


def _split_rate(ch, t, p_s, p_r_m, alpha1):
    c1, c2, c3 = pdf_terms(ch, p_s, t * p_s, (1 - t) * p_s, p_r_m, alpha1)
    return np.minimum(c1 + c2, c3)


def _column(ch):
    return EquivalentChannels(*(np.asarray(getattr(ch, f), dtype=float)[:, None] for f in ch.__dataclass_fields__))


def optimal_split(channels, p_s, p_r, alpha1, grid_points=GRID_POINTS, resolution=REFINE_RESOLUTION):
    """Best common-power fraction t = P_s^m1 / P_s^m for each channel draw.

    The source spends ``p_s`` in both phases and the relay ``p_r / alpha2`` in
    phase 2. ``min(C1 + C2, C3)`` is scanned on a uniform grid over [0, 1],
    then golden-section search refines around the best grid point.
    Returns ``(t, rate)`` arrays.
    """
    ch = EquivalentChannels(*np.broadcast_arrays(*(np.atleast_1d(np.asarray(getattr(channels, f), dtype=float))
                                                   for f in channels.__dataclass_fields__)))
    p_r_m = p_r / (1 - alpha1)
    grid = np.linspace(0.0, 1.0, grid_points)
    col = _column(ch)
    rates = _split_rate(col, grid[None, :], p_s, p_r_m, alpha1)
    best = np.argmax(rates, axis=1)
    best_t = grid[best]
    best_rate = rates[np.arange(len(best)), best]

    step = grid[1] - grid[0]
    lo = np.clip(best_t - step, 0.0, 1.0)
    hi = np.clip(best_t + step, 0.0, 1.0)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = _split_rate(ch, x1, p_s, p_r_m, alpha1)
    f2 = _split_rate(ch, x2, p_s, p_r_m, alpha1)
    while np.max(hi - lo) > resolution:
        left = f1 >= f2
        lo = np.where(left, lo, x1)
        hi = np.where(left, x2, hi)
        x1, x2 = (np.where(left, hi - _GOLDEN * (hi - lo), x2),
                  np.where(left, x1, lo + _GOLDEN * (hi - lo)))
        # one fresh evaluation per step; the other interior point survives
        fresh = _split_rate(ch, np.where(left, x1, x2), p_s, p_r_m, alpha1)
        f1, f2 = np.where(left, fresh, f2), np.where(left, f1, fresh)
    mid = 0.5 * (lo + hi)
    f_mid = _split_rate(ch, mid, p_s, p_r_m, alpha1)
    better = f_mid > best_rate
    return np.where(better, mid, best_t), np.where(better, f_mid, best_rate)


def optimize_power_split(channels, p_s, p_r, alpha1):
    """Rate-maximising allocation for a single channel draw."""
    if p_s < 0 or p_r < 0:
        raise ValueError("power totals must be non-negative")
    t, _ = optimal_split(channels, p_s, p_r, alpha1)
    return PowerProfile.equal_phase(p_s, p_r, alpha1, float(np.clip(t[0], 0.0, 1.0)))


def policy_gated_rate(ch, cooperate, p_s, p_r, alpha1, chunk=8192):
    """Optimised relayed rate where ``cooperate`` holds, direct rate elsewhere."""
    a, b = direct_terms(ch, p_s, alpha1)
    out = np.asarray(a + b, dtype=float).copy()
    idx = np.flatnonzero(cooperate)
    for start in range(0, len(idx), chunk):
        sel = idx[start:start + chunk]
        sub = EquivalentChannels(*(np.asarray(getattr(ch, f))[sel] for f in ch.__dataclass_fields__))
        _, r = optimal_split(sub, p_s, p_r, alpha1)
        out[sel] = r
    return out


# ---------------------------------------------------------------------------
# Scenario distributions for averaging
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedDistances:
    """r1 and r2 fixed, relay direction uniform."""

    r1: float
    r2: float

    def sample(self, n, rng, config):
        return np.full(n, self.r1), np.full(n, self.r2), rng.uniform(0.0, 2 * np.pi, n)


@dataclass(frozen=True)
class RandomRelay:
    """r1 fixed, nearest idle user at a Rayleigh distance in a uniform direction."""

    r1: float

    def sample(self, n, rng, config):
        return np.full(n, self.r1), sample_distance(config.lambda2, n, rng), rng.uniform(0.0, 2 * np.pi, n)


@dataclass(frozen=True)
class RingUsers:
    """Active user uniform over the annulus [inner, outer] of the study cell."""

    inner: float
    outer: float

    def sample(self, n, rng, config):
        r1 = np.sqrt(rng.uniform(self.inner**2, self.outer**2, n))
        return r1, sample_distance(config.lambda2, n, rng), rng.uniform(0.0, 2 * np.pi, n)


@dataclass(frozen=True)
class TypicalUser:
    """Both distances Rayleigh, as seen by a typical active user."""

    def sample(self, n, rng, config):
        return sample_distance(config.lambda1, n, rng), sample_distance(config.lambda2, n, rng), rng.uniform(0.0, 2 * np.pi, n)


@dataclass(frozen=True)
class FixedScenario:
    """Every draw uses the same triangle."""

    r1: float
    r2: float
    psi0: float

    def sample(self, n, rng, config):
        rng.uniform(size=n)  # keep stream consumption in step with the other scenarios
        return np.full(n, self.r1), np.full(n, self.r2), np.full(n, self.psi0)


def as_distribution(scenarios):
    if isinstance(scenarios, CellScenario):
        return FixedScenario(scenarios.r1, scenarios.r2, scenarios.psi0)
    if not hasattr(scenarios, "sample"):
        raise TypeError("scenarios must be a CellScenario or expose sample(n, rng, config)")
    return scenarios


def study_channels(config, r1, r2, d, g_sd, g_sr, g_rd, q_r, q_d_b, q_d_m):
    """Equivalent channels of the study user; co-located nodes give infinite gain."""
    a = float(config.alpha)
    with np.errstate(divide="ignore"):
        sr_gain = g_sr * np.asarray(r2, dtype=float) ** (-a)
        rd_gain = g_rd * np.asarray(d, dtype=float) ** (-a)
    return equivalent_channels(sr_gain, g_sd * np.asarray(r1, dtype=float) ** (-a), rd_gain,
                               q_r, q_d_b, q_d_m, config.noise_power)


def policy_mask(policy, r1, r2, d, g_sd, g_sr, ch, alpha):
    """Cooperation decisions of the study user for ``policy`` (None: never)."""
    if policy is None:
        return np.zeros(np.shape(r1), dtype=bool)
    policy = PolicyKind.parse(policy)
    if policy is PolicyKind.GEOMETRIC:
        return geometric_mask(r1, r2, d)
    if policy is PolicyKind.HYBRID:
        return hybrid_mask(r1, r2, d, g_sd, g_sr, alpha)
    return ideal_mask(ch.h_sr_eq, ch.h_sd_b_eq)


def summarize_rates(rates, coop):
    n = len(rates)
    return RateEstimate(
        mean=float(rates.mean()),
        stderr=float(rates.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
        coop_fraction=float(np.mean(coop)),
        n=n,
    )


def analytic_interference_models(config, profile=None, rho1=None):
    """Gamma fits of the destination terms and the relay moment table."""
    profile = profile or PowerProfile.from_config(config)
    rho1 = network_rho1(config) if rho1 is None else rho1
    z = zeta_coefficients(rho1, profile)
    dest1 = gamma_fit(moments_destination(1, config, z))
    dest2 = gamma_fit(moments_destination(2, config, z))
    return z, dest1, dest2


def average_rate(policy, config, scenarios, n_draws, rng, path="analytic", **sim_options):
    """Policy-gated average rate of a study user, with its standard error.

    ``policy`` is a :class:`PolicyKind` (or ``None`` for a network that never
    relays). The analytic path draws interference powers from the Gamma
    models; ``path="simulation"`` delegates to :mod:`uarelay.montecarlo`.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if path == "simulation":
        from .montecarlo import simulate_rates

        return simulate_rates(policy, config, scenarios, n_draws, rng, **sim_options)
    if path != "analytic":
        raise ValueError(f"unknown path {path!r}")

    rates, coop = analytic_rate_samples(policy, config, scenarios, n_draws, rng)
    return summarize_rates(rates, coop)


def analytic_rate_samples(policy, config, scenarios, n_draws, rng):
    """Per-draw rates and cooperation flags of the analytic (Gamma) path."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    scenarios = as_distribution(scenarios)
    policy = None if policy is None else PolicyKind.parse(policy)
    rho1 = 0.0 if policy is None else network_rho1(config)
    z, dest1, dest2 = analytic_interference_models(config, rho1=rho1)

    r1, r2, psi0 = (np.asarray(x, dtype=float) for x in scenarios.sample(n_draws, rng, config))
    d = relay_to_bs_distance(r1, r2, psi0)
    g_sd, g_sr, g_rd = rng.exponential(size=(3, n_draws))
    u_b, u_m, u_r = rng.uniform(size=(3, n_draws))
    q_d_b = gamma_ppf(u_b, dest1)
    q_d_m = gamma_ppf(u_m, dest2)

    a = float(config.alpha)
    rc = config.cell_radius
    relay_ok = d < rc
    q_r = np.full(n_draws, np.inf)
    if policy is not None and relay_ok.any():
        m, v = relay_moment_table(a)(d[relay_ok] / rc)
        mean = config.lambda1 * z.zeta1 * rc ** (2 - a) * m
        var = config.lambda1 * z.zeta2 * rc ** (2 - 2 * a) * v
        shape, scale = mean * mean / var, var / mean
        q_r[relay_ok] = scale * special.gammaincinv(shape, u_r[relay_ok])

    ch = study_channels(config, r1, r2, d, g_sd, g_sr, g_rd, q_r, q_d_b, q_d_m)
    # no interference model for a relay on or outside the cell edge
    coop = policy_mask(policy, r1, r2, d, g_sd, g_sr, ch, a) & relay_ok
    return policy_gated_rate(ch, coop, config.p_s, config.p_r, config.alpha1), coop
