"""Network geometry: PPP sampling, base-station placement and link distances.

Conventions: points are ``(n, 2)`` float arrays in metres, intensities are in
users/m^2, and every random draw takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .numerics import dbm_to_watts

BS_MAX_DRAWS = 10**6
MEAN_TRUNCATION = 1e-3


class NoRelayCandidate(LookupError):
    """No idle user is available to act as relay."""


class PlacementError(RuntimeError):
    """Base-station rejection sampling ran out of draws."""


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters shared by the analytic and simulation paths.

    ``rho1`` is the network-wide cooperation probability used to thin the
    interferer marks. Leave it as ``None`` to derive it from the densities
    according to ``rho1_mode`` ("e2" or "e3").
    """

    lambda1: float
    lambda2: float
    alpha: float = 4.0
    cell_radius: float | None = None
    noise_power: float = 0.0
    p_s: float = field(default_factory=lambda: dbm_to_watts(23.0))
    p_r: float | None = None
    alpha1: float = 0.5
    rho1: float | None = None
    rho1_mode: str = "e3"
    rmax_factor: float | None = None
    common_fraction: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.lambda1) and self.lambda1 > 0):
            raise ValueError(f"lambda1 must be > 0, got {self.lambda1}")
        if not (math.isfinite(self.lambda2) and self.lambda2 >= 0):
            raise ValueError(f"lambda2 must be >= 0, got {self.lambda2}")
        if not self.alpha > 2:
            raise ValueError(f"path-loss exponent must exceed 2, got {self.alpha}")
        if self.cell_radius is None:
            object.__setattr__(self, "cell_radius", 1.0 / (2.0 * math.sqrt(self.lambda1)))
        if not self.cell_radius > 0:
            raise ValueError("cell_radius must be positive")
        if self.noise_power < 0:
            raise ValueError("noise_power must be >= 0")
        if self.p_r is None:
            object.__setattr__(self, "p_r", self.p_s)
        if self.p_s < 0 or self.p_r < 0:
            raise ValueError("transmit powers must be >= 0")
        if not 0 < self.alpha1 < 1:
            raise ValueError(f"alpha1 must lie in (0, 1), got {self.alpha1}")
        if self.rho1 is not None and not 0 <= self.rho1 <= 0.5:
            raise ValueError(f"rho1 must lie in [0, 0.5], got {self.rho1}")
        if self.rho1_mode not in ("e2", "e3", "fixed"):
            raise ValueError(f"unknown rho1_mode {self.rho1_mode!r}")
        if self.rho1_mode == "fixed" and self.rho1 is None:
            raise ValueError("rho1_mode 'fixed' needs an explicit rho1")
        if not 0 <= self.common_fraction <= 1:
            raise ValueError("common_fraction must lie in [0, 1]")
        if self.rmax_factor is not None and not self.rmax_factor > 1:
            raise ValueError("rmax_factor must exceed 1")

    @property
    def alpha2(self):
        return 1.0 - self.alpha1

    @property
    def r_max(self):
        """Outer radius of the simulated interferer annulus.

        By default the truncated Campbell mean keeps 1 - 1e-3 of its mass.
        """
        if self.rmax_factor is not None:
            return self.cell_radius * self.rmax_factor
        return self.cell_radius * MEAN_TRUNCATION ** (-1.0 / (self.alpha - 2.0))

    def replace(self, **changes):
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return NetworkConfig(**values)


# ---------------------------------------------------------------------------
# Sampling windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"degenerate disk radius {self.radius}")

    @property
    def area(self):
        return math.pi * self.radius**2

    def sample(self, n, rng):
        rad = self.radius * np.sqrt(rng.uniform(size=n))
        ang = rng.uniform(0.0, 2 * np.pi, size=n)
        return np.column_stack((self.center[0] + rad * np.cos(ang), self.center[1] + rad * np.sin(ang)))

    def contains(self, pts):
        d = np.asarray(pts) - np.asarray(self.center)
        return np.einsum("ij,ij->i", d, d) <= self.radius**2


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (0 <= self.inner < self.outer and math.isfinite(self.outer)):
            raise ValueError(f"degenerate annulus [{self.inner}, {self.outer}]")

    @property
    def area(self):
        return math.pi * (self.outer**2 - self.inner**2)

    def sample_radii(self, n, rng):
        # inverse CDF of r on the annulus: F(r) ∝ r^2 - inner^2
        u = rng.uniform(size=n)
        return np.sqrt(self.inner**2 + u * (self.outer**2 - self.inner**2))

    def sample(self, n, rng):
        rad = self.sample_radii(n, rng)
        ang = rng.uniform(0.0, 2 * np.pi, size=n)
        return np.column_stack((self.center[0] + rad * np.cos(ang), self.center[1] + rad * np.sin(ang)))

    def contains(self, pts):
        d = np.asarray(pts) - np.asarray(self.center)
        r2 = np.einsum("ij,ij->i", d, d)
        return (r2 >= self.inner**2) & (r2 <= self.outer**2)


@dataclass(frozen=True)
class Rect:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(math.isfinite(v) for v in vals) or self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise ValueError(f"degenerate rectangle {vals}")

    @property
    def area(self):
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def centroid(self):
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def sample(self, n, rng):
        return np.column_stack((rng.uniform(self.xmin, self.xmax, n), rng.uniform(self.ymin, self.ymax, n)))

    def contains(self, pts):
        p = np.asarray(pts)
        return (p[:, 0] >= self.xmin) & (p[:, 0] <= self.xmax) & (p[:, 1] >= self.ymin) & (p[:, 1] <= self.ymax)


# ---------------------------------------------------------------------------
# Layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellScenario:
    """Source-relay-BS triangle of the cell under study.

    ``psi0`` is the angle at the source between the BS and relay directions.
    """

    r1: float
    r2: float
    psi0: float = 0.0
    d_relay_bs: float = field(init=False)

    def __post_init__(self):
        if not self.r1 > 0 or self.r2 < 0:
            raise ValueError(f"invalid distances r1={self.r1}, r2={self.r2}")
        object.__setattr__(self, "psi0", float(self.psi0) % (2 * math.pi))
        object.__setattr__(self, "d_relay_bs", float(relay_to_bs_distance(self.r1, self.r2, self.psi0)))

    @property
    def source_xy(self):
        """Source position with the BS at the origin and the source on +x."""
        return np.array([self.r1, 0.0])

    @property
    def relay_xy(self):
        # direction source->BS is pi; rotate by psi0
        ang = math.pi + self.psi0
        return self.source_xy + self.r2 * np.array([math.cos(ang), math.sin(ang)])


@dataclass
class NetworkRealization:
    """One sampled layout of the plane, with per-user marks."""

    active_users: np.ndarray
    idle_users: np.ndarray
    base_stations: np.ndarray
    cooperate: np.ndarray
    g_sd: np.ndarray
    g_sr: np.ndarray
    g_rd: np.ndarray
    theta_s: np.ndarray
    theta_r: np.ndarray
    window: Disk | Annulus | Rect


def sample_ppp(intensity, window, rng):
    """Homogeneous PPP draw over ``window``; returns an ``(n, 2)`` array."""
    if not math.isfinite(intensity) or intensity < 0:
        raise ValueError(f"intensity must be finite and >= 0, got {intensity}")
    if not window.area > 0:
        raise ValueError("window has no area")
    n = rng.poisson(intensity * window.area)
    return window.sample(n, rng)


def place_base_stations(active_users, window, rng, indices=None, max_draws=BS_MAX_DRAWS, batch=4096):
    """One BS per user, uniform over the user's Voronoi cell clipped to ``window``.

    Candidates are drawn uniformly in the window and handed to their nearest
    user; the first candidate landing in a cell becomes that cell's BS, which
    makes it uniform on the cell. ``indices`` restricts placement to a subset
    of users (rows come back in that order).
    """
    users = np.asarray(active_users, dtype=float).reshape(-1, 2)
    if len(users) == 0:
        raise ValueError("need at least one active user")
    wanted = np.arange(len(users)) if indices is None else np.asarray(indices, dtype=int)
    tree = cKDTree(users)
    found = {}
    pending = set(np.unique(wanted).tolist())
    drawn = 0
    while pending:
        if drawn >= max_draws:
            raise PlacementError(
                f"{len(pending)} base station(s) unplaced after {drawn} draws; "
                "Voronoi cell(s) barely intersect the window"
            )
        m = min(batch, max_draws - drawn)
        cand = window.sample(m, rng)
        drawn += m
        _, owner = tree.query(cand)
        hit = np.isin(owner, list(pending))
        if not hit.any():
            continue
        owners, first = np.unique(owner[hit], return_index=True)
        for j, c in zip(owners.tolist(), cand[hit][first]):
            found[j] = c
            pending.discard(j)
    return np.array([found[j] for j in wanted.tolist()])


def nearest_idle(source, idle_users):
    """Closest idle user to ``source``: ``(point, distance, index)``.

    Ties go to the lowest index.
    """
    idle = np.asarray(idle_users, dtype=float).reshape(-1, 2)
    if len(idle) == 0:
        raise NoRelayCandidate("no idle user available; fall back to direct transmission")
    d = np.hypot(idle[:, 0] - source[0], idle[:, 1] - source[1])
    k = int(np.argmin(d))
    return idle[k].copy(), float(d[k]), k


def relay_to_bs_distance(r1, r2, psi0):
    """Law of cosines: distance between relay and BS."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if np.any(r1 < 0) or np.any(r2 < 0):
        raise ValueError("distances must be non-negative")
    d2 = r1**2 + r2**2 - 2.0 * r1 * r2 * np.cos(psi0)
    out = np.sqrt(np.maximum(d2, 0.0))
    return out if out.ndim else float(out)


def _intensity(which, config):
    if which == "direct":
        return config.lambda1
    if which == "cooperation":
        return config.lambda2
    raise ValueError(f"which must be 'direct' or 'cooperation', got {which!r}")


def distance_pdf(which, r, config):
    """Rayleigh density of the direct (lambda1) or cooperation (lambda2) distance."""
    lam = _intensity(which, config)
    if lam <= 0:
        raise ValueError(f"{which} intensity must be positive")
    r = np.asarray(r, dtype=float)
    out = 2 * np.pi * lam * r * np.exp(-lam * np.pi * r**2)
    return out if out.ndim else float(out)


def distance_cdf(which, r, config):
    lam = _intensity(which, config)
    r = np.asarray(r, dtype=float)
    out = -np.expm1(-lam * np.pi * r**2)
    return out if out.ndim else float(out)


def sample_distance(intensity, n, rng):
    """Nearest-point distance of a PPP seen from a typical location (Rayleigh)."""
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    return rng.rayleigh(1.0 / math.sqrt(2 * math.pi * intensity), size=n)


def sample_scenarios(config, n, rng):
    """Independent (r1, r2, psi0) draws used by the analytic model."""
    r1 = sample_distance(config.lambda1, n, rng)
    r2 = sample_distance(config.lambda2, n, rng) if config.lambda2 > 0 else np.full(n, np.inf)
    psi0 = rng.uniform(0.0, 2 * np.pi, size=n)
    return r1, r2, psi0


def sample_realization(config, window, rng):
    """Full layout: both PPPs, one BS per active user, and per-user marks."""
    from .policies import network_rho1

    users = sample_ppp(config.lambda1, window, rng)
    idle = sample_ppp(config.lambda2, window, rng)
    bs = place_base_stations(users, window, rng) if len(users) else np.empty((0, 2))
    n = len(users)
    rho1 = network_rho1(config)
    return NetworkRealization(
        active_users=users,
        idle_users=idle,
        base_stations=bs,
        cooperate=rng.uniform(size=n) < rho1,
        g_sd=rng.exponential(size=n),
        g_sr=rng.exponential(size=n),
        g_rd=rng.exponential(size=n),
        theta_s=rng.uniform(0.0, 2 * np.pi, size=n),
        theta_r=rng.uniform(0.0, 2 * np.pi, size=n),
        window=window,
    )


def simulate_link_distances(config, n_layouts, rng, probes_per_layout=10, window_radius=None):
    """Direct (r1) and cooperation (r2) distances measured on full PPP layouts.

    A BS is picked the way a uniformly random point of the plane picks it:
    probe points choose the Voronoi cell containing them (area-biased), and
    the distance is measured to that cell's BS placed by rejection sampling.
    The relay distance is the source's nearest idle user.
    """
    if window_radius is None:
        window_radius = 10.0 / math.sqrt(math.pi * config.lambda1)
    window = Disk(window_radius)
    probe_region = Disk(0.5 * window_radius)
    r1_out, r2_out = [], []
    for _ in range(n_layouts):
        users = sample_ppp(config.lambda1, window, rng)
        idle = sample_ppp(config.lambda2, window, rng)
        if len(users) == 0 or len(idle) == 0:
            continue
        probes = probe_region.sample(probes_per_layout, rng)
        _, owner = cKDTree(users).query(probes)
        bs = place_base_stations(users, window, rng, indices=owner)
        r1_out.append(np.hypot(*(bs - users[owner]).T))
        d_idle, _ = cKDTree(idle).query(users[owner])
        r2_out.append(d_idle)
    return np.concatenate(r1_out), np.concatenate(r2_out)
