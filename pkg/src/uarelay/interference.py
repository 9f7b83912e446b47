"""Analytic out-of-cell interference: moments, Laplace transforms, Gamma fits.

The interferer field is a PPP of intensity ``lambda1`` outside a disk of
radius ``Rc`` centred on the study BS. Each interferer relays with
probability ``rho1``; out-of-cell relays are co-located with their sources.
Receivers are the study BS (both phases) and the study relay at distance
``D < Rc`` from the BS (first phase only).

Radial integrals are non-dimensionalised with ``r = Rc * x`` and mapped to
(0, 1] (see :func:`uarelay.numerics.integrate_radial_tail`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .numerics import integrate_radial_tail, periodic_mean

REL_TOL = 1e-9


class DivergentMomentError(ValueError):
    """The requested moment is infinite for this path-loss exponent."""


class RelaySingularityError(ValueError):
    """The relay sits on or outside the study-cell edge."""


@dataclass(frozen=True)
class PowerProfile:
    """Per-phase transmit powers of a PDF source/relay pair (watts)."""

    p_s: float
    p_r: float
    p_s_b: float
    p_s_m1: float
    p_s_m2: float
    p_r_m: float
    alpha1: float = 0.5

    def __post_init__(self):
        powers = (self.p_s, self.p_r, self.p_s_b, self.p_s_m1, self.p_s_m2, self.p_r_m)
        if min(powers) < 0:
            raise ValueError("powers must be non-negative")
        if not 0 < self.alpha1 < 1:
            raise ValueError("alpha1 must lie in (0, 1)")
        a1, a2 = self.alpha1, self.alpha2
        if not math.isclose(a1 * self.p_s_b + a2 * self.p_s_m, self.p_s, rel_tol=REL_TOL, abs_tol=1e-300):
            raise ValueError("source powers violate the average power constraint")
        if not math.isclose(a2 * self.p_r_m, self.p_r, rel_tol=REL_TOL, abs_tol=1e-300):
            raise ValueError("relay power violates the average power constraint")

    @property
    def alpha2(self):
        return 1.0 - self.alpha1

    @property
    def p_s_m(self):
        return self.p_s_m1 + self.p_s_m2

    @property
    def common_fraction(self):
        return self.p_s_m1 / self.p_s_m if self.p_s_m > 0 else 0.0

    @classmethod
    def equal_phase(cls, p_s, p_r, alpha1=0.5, common_fraction=0.0):
        """Source uses the same power in both phases; relay spends its budget in phase 2.

        ``common_fraction`` is the share of the phase-2 source power carried
        by the common (relay-assisted) codeword.
        """
        if not 0 <= common_fraction <= 1:
            raise ValueError("common_fraction must lie in [0, 1]")
        alpha2 = 1.0 - alpha1
        return cls(
            p_s=p_s,
            p_r=p_r,
            p_s_b=p_s,
            p_s_m1=common_fraction * p_s,
            p_s_m2=(1.0 - common_fraction) * p_s,
            p_r_m=p_r / alpha2,
            alpha1=alpha1,
        )

    @classmethod
    def from_config(cls, config):
        return cls.equal_phase(config.p_s, config.p_r, config.alpha1, config.common_fraction)


PowerAllocation = PowerProfile


@dataclass(frozen=True)
class ZetaCoefficients:
    zeta1: float
    zeta2: float
    zeta3: float
    zeta4: float


@dataclass(frozen=True)
class InterferenceMoments:
    mean: float
    variance: float
    term: str


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("Gamma shape and scale must be positive")

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def variance(self):
        return self.shape * self.scale**2


def zeta_coefficients(rho1, profile):
    """Power-mixture coefficients of the interference mean and variance.

    zeta1/zeta3 are the mean per-interferer powers in phase 1/2, zeta2/zeta4
    the matching second moments of the exponentially faded powers. In phase 2
    a cooperating interferer contributes two independent faded terms
    (source power P_s^m, relay power P_r^m), so
    E[(g1 a + g2 b)^2] = 2 (a + b)^2 - 2 a b.
    """
    if not 0 <= rho1 <= 1:
        raise ValueError(f"rho1 must be a probability, got {rho1}")
    p, pb, pm, prm = profile.p_s, profile.p_s_b, profile.p_s_m, profile.p_r_m
    return ZetaCoefficients(
        zeta1=rho1 * pb + (1 - rho1) * p,
        zeta2=2 * (rho1 * pb**2 + (1 - rho1) * p**2),
        zeta3=rho1 * (pm + prm) + (1 - rho1) * p,
        zeta4=2 * (rho1 * (pm + prm) ** 2 + (1 - rho1) * p**2 - rho1 * pm * prm),
    )


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


def moments_destination(phase, config, zetas):
    """Mean and variance of the interference power at the study BS."""
    if phase not in (1, 2):
        raise ValueError("phase must be 1 or 2")
    a, lam, rc = config.alpha, config.lambda1, config.cell_radius
    if a <= 2:
        raise DivergentMomentError(f"mean interference diverges for alpha={a} <= 2")
    z_mean, z_var = (zetas.zeta1, zetas.zeta2) if phase == 1 else (zetas.zeta3, zetas.zeta4)
    mean = 2 * math.pi * lam * z_mean / (a - 2) * rc ** (2 - a)
    var = math.pi * lam * z_var / (a - 1) * rc ** (2 * (1 - a))
    return InterferenceMoments(mean, var, "dest_phase1" if phase == 1 else "dest_phase2")


def _check_relay_offset(delta):
    if not 0 <= delta < 1:
        raise RelaySingularityError(
            f"relay at D = {delta:.6g} Rc: the interferer field reaches the relay"
        )


def _offset_sq(x, delta, t):
    # x^2 + delta^2 - 2 x delta cos t, written without cancellation near t = 0
    return (x - delta) ** 2 + 4 * x * delta * np.sin(0.5 * t) ** 2


def _is_integer(x):
    return float(x).is_integer()


def disk_exterior_integral(k, delta):
    """Exact value of int_{|y|>1} |y - delta|^(-2k) dA for integer k >= 2.

    The angular average of |y - delta|^(-2k) over a circle of radius r is
    P_{k-1}((r^2 + delta^2) / (r^2 - delta^2)) / (r^2 - delta^2)^k. Expanding
    the Legendre polynomial as P_n(1 + 2t) = sum_j C(n, j) C(n + j, j) t^j
    leaves power laws in r^2 - delta^2 that integrate term by term.
    Vectorised in ``delta``.
    """
    k = int(k)
    if k < 2:
        raise ValueError("k must be an integer >= 2")
    d2 = np.asarray(delta, dtype=float) ** 2
    c = 1.0 - d2
    total = np.zeros_like(c)
    for j in range(k):
        coef = math.comb(k - 1, j) * math.comb(k - 1 + j, j) / (k + j - 1)
        total = total + coef * d2**j * c ** (1.0 - k - j)
    out = math.pi * total
    return out if out.ndim else float(out)


def _numeric_factor(alpha, delta, power):
    def ring(x):
        if x * 1e-7 > delta:
            # offset negligible at this range (relative error < 1e-13)
            return 2 * math.pi * x ** (-2 * power)
        return 2 * math.pi * periodic_mean(lambda t: _offset_sq(x, delta, t) ** (-power))

    return integrate_radial_tail(ring, 1.0, 2 * power, epsabs=0.0, epsrel=1e-11)


@lru_cache(maxsize=4096)
def relay_geometry_factors(alpha, delta):
    """Dimensionless relay-moment integrals for a relay at ``delta * Rc``.

    Returns ``(m, v)`` with
    m = int_0^2pi int_1^inf (x^2 + delta^2 - 2 x delta cos t)^(-alpha/2) x dx dt
    and v the same with exponent ``-alpha``. At delta = 0 they equal
    2 pi / (alpha - 2) and pi / (alpha - 1). Even-integer exponents use the
    closed form of :func:`disk_exterior_integral`; the rest are integrated.
    """
    _check_relay_offset(delta)
    if delta == 0:
        return 2 * math.pi / (alpha - 2), math.pi / (alpha - 1)
    if _is_integer(alpha / 2):
        m = disk_exterior_integral(alpha / 2, delta)
    else:
        m = _numeric_factor(alpha, delta, alpha / 2)
    if _is_integer(alpha):
        v = disk_exterior_integral(alpha, delta)
    else:
        v = _numeric_factor(alpha, delta, alpha)
    return m, v


def moments_relay(config, zetas, d_relay_bs):
    """Mean and variance of the first-phase interference power at the relay."""
    a, lam, rc = config.alpha, config.lambda1, config.cell_radius
    if a <= 2:
        raise DivergentMomentError(f"mean interference diverges for alpha={a} <= 2")
    if d_relay_bs < 0:
        raise ValueError("relay distance must be non-negative")
    m, v = relay_geometry_factors(a, d_relay_bs / rc)
    mean = lam * zetas.zeta1 * rc ** (2 - a) * m
    var = lam * zetas.zeta2 * rc ** (2 - 2 * a) * v
    return InterferenceMoments(mean, var, "relay_phase1")


class RelayMomentTable:
    """Relay geometry factors as a vectorised function of delta in [0, 1).

    Exponents with a closed form are evaluated exactly. Otherwise a spline in
    log space is fitted on [0, delta_max], with nodes clustered near the cell
    edge. Past ``delta_max`` the factors follow their edge singularity,
    m ~ (1 - delta)^(2 - alpha) and v ~ (1 - delta)^(2 - 2 alpha), matched at
    ``delta_max``.
    """

    def __init__(self, alpha, n_nodes=64, delta_max=0.995):
        self.alpha = alpha
        self.delta_max = delta_max
        self._m_exact = _is_integer(alpha / 2)
        self._v_exact = _is_integer(alpha)
        if self._m_exact and self._v_exact:
            return
        u = np.linspace(0.0, 1.0, n_nodes)
        nodes = delta_max * (1 - (1 - u) ** 2)
        vals = np.array([relay_geometry_factors(alpha, float(d)) for d in nodes])
        self._m = CubicSpline(nodes, np.log(vals[:, 0]))
        self._v = CubicSpline(nodes, np.log(vals[:, 1]))

    def _interp(self, spline, delta, exponent):
        inner = np.minimum(delta, self.delta_max)
        edge = (1 - self.delta_max) / (1 - np.maximum(delta, self.delta_max))
        return np.exp(spline(inner)) * edge ** (-exponent)

    def __call__(self, delta):
        delta = np.asarray(delta, dtype=float)
        if np.any((delta < 0) | (delta >= 1)):
            raise RelaySingularityError("relay offsets must lie in [0, Rc)")
        a = self.alpha
        if self._m_exact:
            m = disk_exterior_integral(a / 2, delta)
        else:
            m = self._interp(self._m, delta, 2 - a)
        if self._v_exact:
            v = disk_exterior_integral(a, delta)
        else:
            v = self._interp(self._v, delta, 2 - 2 * a)
        return np.asarray(m, dtype=float), np.asarray(v, dtype=float)


@lru_cache(maxsize=32)
def relay_moment_table(alpha):
    return RelayMomentTable(alpha)


def network_moments(config, profile, rho1, d_relay_bs=0.0):
    """The three interference terms for a study cell with relay at ``d_relay_bs``."""
    z = zeta_coefficients(rho1, profile)
    return {
        "dest_phase1": moments_destination(1, config, z),
        "dest_phase2": moments_destination(2, config, z),
        "relay_phase1": moments_relay(config, z, d_relay_bs),
    }


# ---------------------------------------------------------------------------
# Laplace transforms
# ---------------------------------------------------------------------------


def _faded_tail(x):
    """1 - 1/(1 + x) without cancellation."""
    return x / (1.0 + x)


def _phase1_mark(rho1, profile):
    def one_minus_lj(u):
        # u = s * (distance)^-alpha
        return rho1 * _faded_tail(u * profile.p_s_b) + (1 - rho1) * _faded_tail(u * profile.p_s)

    return one_minus_lj


def _phase2_mark(rho1, profile):
    def one_minus_lj(u):
        a = u * profile.p_s_m
        b = u * profile.p_r_m
        c = u * profile.p_s
        both = (a + b + a * b) / ((1 + a) * (1 + b))
        return rho1 * both + (1 - rho1) * _faded_tail(c)

    return one_minus_lj


def _check_s(s):
    if not s >= 0:
        raise ValueError(f"Laplace variable must be >= 0, got {s}")


def log_laplace_destination(phase, s, config, profile, rho1):
    _check_s(s)
    if phase not in (1, 2):
        raise ValueError("phase must be 1 or 2")
    if s == 0 or config.lambda1 == 0:
        return 0.0
    a, rc = config.alpha, config.cell_radius
    mark = _phase1_mark(rho1, profile) if phase == 1 else _phase2_mark(rho1, profile)
    s_edge = s * rc ** (-a)
    integral = integrate_radial_tail(lambda x: mark(s_edge * x ** (-a)), 1.0, a, epsabs=0.0, epsrel=1e-12)
    return -2 * math.pi * config.lambda1 * rc**2 * integral


def laplace_destination(phase, s, config, profile, rho1):
    """E[exp(-s Q)] of the study-BS interference power in ``phase``."""
    return math.exp(log_laplace_destination(phase, s, config, profile, rho1))


def log_laplace_relay(s, config, profile, rho1, d_relay_bs):
    _check_s(s)
    rc, a = config.cell_radius, config.alpha
    delta = d_relay_bs / rc
    _check_relay_offset(delta)
    if s == 0 or config.lambda1 == 0:
        return 0.0
    mark = _phase1_mark(rho1, profile)
    s_edge = s * rc ** (-a)

    def ring(x):
        if x * 1e-7 > delta:
            return 2 * math.pi * mark(s_edge * x ** (-a))

        def at(t):
            return mark(s_edge * _offset_sq(x, delta, t) ** (-a / 2))

        return 2 * math.pi * periodic_mean(at)

    integral = integrate_radial_tail(ring, 1.0, a, epsabs=0.0, epsrel=1e-12)
    return -config.lambda1 * rc**2 * integral


def laplace_relay(s, config, profile, rho1, d_relay_bs):
    """E[exp(-s Q_r)] of the first-phase interference power at the relay."""
    return math.exp(log_laplace_relay(s, config, profile, rho1, d_relay_bs))


# ---------------------------------------------------------------------------
# Gamma moment matching
# ---------------------------------------------------------------------------


def gamma_fit(moments):
    """Gamma(k, theta) with the same mean and variance."""
    mean, var = moments.mean, moments.variance
    if not (mean > 0 and var > 0):
        raise ValueError(f"need positive mean and variance, got {mean}, {var}")
    return GammaParams(shape=mean * mean / var, scale=var / mean)


def gamma_fit_samples(samples):
    """Gamma fit to the sample mean and (unbiased) sample variance."""
    x = np.asarray(samples, dtype=float)
    return gamma_fit(InterferenceMoments(float(x.mean()), float(x.var(ddof=1)), "sample"))


def gamma_pdf(q, params):
    q = np.asarray(q, dtype=float)
    k, th = params.shape, params.scale
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (k - 1) * np.log(q) - q / th - k * math.log(th) - special.gammaln(k)
    out = np.where(q > 0, np.exp(logp), 0.0 if k > 1 else (1 / th if k == 1 else np.inf))
    out = np.where(q < 0, 0.0, out)
    return out if out.ndim else float(out)


def gamma_cdf(q, params):
    q = np.asarray(q, dtype=float)
    out = special.gammainc(params.shape, np.maximum(q, 0.0) / params.scale)
    return out if out.ndim else float(out)


def gamma_ppf(u, params):
    out = params.scale * special.gammaincinv(params.shape, np.asarray(u, dtype=float))
    return out if np.ndim(out) else float(out)


def sample_gamma(params, rng, size=None):
    return rng.gamma(params.shape, params.scale, size=size)
