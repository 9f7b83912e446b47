"""Cooperation policies and their analytic cooperation probabilities.

Three per-user rules decide between relaying and direct transmission:

* ideal (E1): compare interference-normalised link gains,
* geometric (E2): ``r2 <= r1`` and ``D <= r1``,
* hybrid (E3): ``g_sd r1^-a <= g_sr r2^-a`` and ``D <= r1``.

Ties always go to relaying. The ``*_mask`` functions are the vectorised
forms used by the simulators; ``decide_*`` wrap them for a single user.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import integrate_1d


class PolicyKind(enum.Enum):
    IDEAL = "e1"
    GEOMETRIC = "e2"
    HYBRID = "e3"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown policy {value!r}; expected one of e1, e2, e3")


@dataclass(frozen=True)
class FadingDraw:
    g_sd: float
    g_sr: float
    g_rd: float = 1.0

    def __post_init__(self):
        if min(self.g_sd, self.g_sr, self.g_rd) <= 0:
            raise ValueError("fading power gains must be strictly positive")

    @classmethod
    def sample(cls, rng):
        return cls(*rng.exponential(size=3))


@dataclass(frozen=True)
class CoopDecision:
    cooperate: bool
    policy: PolicyKind

    def __bool__(self):
        return self.cooperate


# ---------------------------------------------------------------------------
# Decision rules
# ---------------------------------------------------------------------------


def geometric_mask(r1, r2, d_relay_bs):
    r1 = np.asarray(r1)
    return (np.asarray(r2) <= r1) & (np.asarray(d_relay_bs) <= r1)


def hybrid_mask(r1, r2, d_relay_bs, g_sd, g_sr, alpha):
    # g_sd r1^-a <= g_sr r2^-a, cross-multiplied so r2 = 0 needs no infinity
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    fading_ok = np.asarray(g_sd) * r2**alpha <= np.asarray(g_sr) * r1**alpha
    return fading_ok & (np.asarray(d_relay_bs) <= r1)


def ideal_mask(equiv_sr_gain, equiv_sd_gain):
    return np.asarray(equiv_sr_gain) >= np.asarray(equiv_sd_gain)


def ideal_mask_interference_limited(g_sr, r2, q_r, g_sd, r1, q_d_b, alpha):
    """Noise-free SINR-ratio form of the ideal rule."""
    lhs = np.asarray(g_sr) * np.asarray(r1, dtype=float) ** alpha * np.asarray(q_d_b)
    rhs = np.asarray(g_sd) * np.asarray(r2, dtype=float) ** alpha * np.asarray(q_r)
    return lhs >= rhs


def decide_geometric(scenario):
    ok = geometric_mask(scenario.r1, scenario.r2, scenario.d_relay_bs)
    return CoopDecision(bool(ok), PolicyKind.GEOMETRIC)


def decide_hybrid(scenario, fading, alpha):
    ok = hybrid_mask(scenario.r1, scenario.r2, scenario.d_relay_bs, fading.g_sd, fading.g_sr, alpha)
    return CoopDecision(bool(ok), PolicyKind.HYBRID)


def decide_ideal(equiv_sr_gain, equiv_sd_gain):
    if math.isnan(equiv_sr_gain) or math.isnan(equiv_sd_gain) or min(equiv_sr_gain, equiv_sd_gain) < 0:
        raise ValueError("equivalent gains must be non-negative")
    return CoopDecision(bool(ideal_mask(equiv_sr_gain, equiv_sd_gain)), PolicyKind.IDEAL)


# ---------------------------------------------------------------------------
# Fading-ratio law: beta = (g_sr / g_sd)^(1/alpha)
# ---------------------------------------------------------------------------


def beta_pdf(z, alpha):
    z = np.asarray(z, dtype=float)
    za = z**alpha
    out = alpha * z ** (alpha - 1) / (1 + za) ** 2
    return out if out.ndim else float(out)


def beta_cdf(z, alpha):
    z = np.asarray(z, dtype=float)
    out = 1.0 - 1.0 / (1.0 + z**alpha)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Cooperation probabilities
# ---------------------------------------------------------------------------


def _angle_density(psi, lambda1, lambda2):
    """P{r2 <= 2 r1 cos(psi)} per unit psi, for Rayleigh r1, r2 and uniform psi."""
    c2 = math.cos(psi) ** 2
    return 2 * lambda2 * c2 / (math.pi * (lambda1 + 4 * lambda2 * c2))


def _check_densities(lambda1, lambda2):
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    if lambda2 < 0:
        raise ValueError("lambda2 must be non-negative")


def coop_prob_geometric(lambda1, lambda2):
    """Probability that the geometric policy cooperates."""
    _check_densities(lambda1, lambda2)
    if lambda2 == 0:
        return 0.0
    args = (lambda1, lambda2)
    lower = integrate_1d(_angle_density, -math.pi / 2, -math.pi / 3, args=args)
    upper = integrate_1d(_angle_density, math.pi / 3, math.pi / 2, args=args)
    return lower + upper + lambda2 / (3 * (lambda1 + lambda2))


def coop_prob_hybrid(lambda1, lambda2, alpha, printed_form=False):
    """Probability that the hybrid policy cooperates.

    Conditioned on beta = z, the relay must satisfy r2 <= min(z, 2 cos psi) r1.
    For |psi| < acos(z/2) the fading bound binds, giving
    lambda2 z^2 / (lambda1 + lambda2 z^2) per unit angle / (2 pi).
    ``printed_form=True`` replaces that factor with lambda2 / (lambda1 + lambda2)
    (the r2 <= r1 bound), which overestimates the probability for small
    density ratios; it is kept only for comparison.
    """
    _check_densities(lambda1, lambda2)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if lambda2 == 0:
        return 0.0
    args = (lambda1, lambda2)

    def inner(z):
        edge = math.acos(z / 2)
        wings = integrate_1d(_angle_density, -math.pi / 2, -edge, args=args)
        wings += integrate_1d(_angle_density, edge, math.pi / 2, args=args)
        if printed_form:
            core = lambda2 * edge / (math.pi * (lambda1 + lambda2))
        else:
            core = lambda2 * z * z * edge / (math.pi * (lambda1 + lambda2 * z * z))
        return beta_pdf(z, alpha) * (wings + core)

    body = integrate_1d(inner, 0.0, 2.0)
    full = integrate_1d(_angle_density, -math.pi / 2, math.pi / 2, args=args)
    # beta tail over [2, inf) via u = 1/z: f(1/u) / u^2 on (0, 1/2]
    tail_mass = integrate_1d(lambda u: beta_pdf(1.0 / u, alpha) / (u * u) if u > 0 else 0.0, 0.0, 0.5)
    return body + full * tail_mass


@lru_cache(maxsize=256)
def _cached_rho(mode, lambda1, lambda2, alpha):
    if mode == "e2":
        return coop_prob_geometric(lambda1, lambda2)
    return coop_prob_hybrid(lambda1, lambda2, alpha)


def network_rho1(config):
    """Cooperation probability used to thin the interferer field."""
    if config.rho1 is not None:
        return config.rho1
    return _cached_rho(config.rho1_mode, config.lambda1, config.lambda2, config.alpha)
