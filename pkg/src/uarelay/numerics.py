"""Quadrature helpers and unit conversions shared by the analytic modules."""

import math

import numpy as np
from scipy import integrate

QUAD_EPSABS = 1e-8
QUAD_LIMIT = 10_000


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature fails to reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved abs error {achieved:.3e})")
        self.achieved = achieved


def integrate_1d(func, a, b, epsabs=QUAD_EPSABS, epsrel=1e-10, args=()):
    """Adaptive Gauss-Kronrod integral of ``func`` over [a, b].

    Thin wrapper over QUADPACK that turns a non-converged result into a
    :class:`QuadratureError` instead of a warning.
    """
    value, abserr, _info, *warning = integrate.quad(
        func, a, b, args=args, epsabs=epsabs, epsrel=epsrel,
        limit=QUAD_LIMIT, full_output=1,
    )
    # QUADPACK only appends a message when ier != 0; round-off warnings on an
    # already-tight estimate are tolerated.
    if warning and abserr > max(epsabs, epsrel * abs(value)):
        raise QuadratureError(f"quadrature did not converge on [{a}, {b}]", abserr)
    return value


def integrate_radial_tail(func, inner, alpha, epsabs=1e-14, epsrel=1e-12):
    """Integrate ``func(r) * r`` over [inner, inf) for power-law tails.

    Uses w = (inner/r)**(alpha-2), which maps the tail onto (0, 1] and turns
    an r**(1-alpha) integrand into a constant, so shot-noise style integrals
    converge without truncation.
    """
    if alpha <= 2:
        raise ValueError("radial tail substitution needs alpha > 2")
    p = alpha - 2.0
    scale = inner ** 2 / p

    def integrand(w):
        if w <= 0.0:
            return 0.0
        r = inner * w ** (-1.0 / p)
        return func(r) * scale * w ** (-2.0 / p - 1.0)

    return integrate_1d(integrand, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel)


def periodic_mean(func, tol=1e-12, start=64, max_points=1 << 22):
    """Mean of a smooth 2*pi-periodic vectorised function over one period.

    The trapezoid rule converges geometrically for analytic periodic
    integrands; the node count doubles until successive estimates agree.
    """
    n = start
    theta = 2 * np.pi * np.arange(n) / n
    prev = float(np.mean(func(theta)))
    while n < max_points:
        n *= 2
        # reuse old nodes: new estimate averages old and odd nodes
        odd = 2 * np.pi * (np.arange(n // 2) + 0.5) / (n // 2)
        cur = 0.5 * (prev + float(np.mean(func(odd))))
        if abs(cur - prev) <= tol * abs(cur) or cur == prev:
            return cur
        prev = cur
    raise QuadratureError("periodic trapezoid rule did not converge", abs(cur - prev))


def dbm_to_watts(p_dbm):
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w):
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)
