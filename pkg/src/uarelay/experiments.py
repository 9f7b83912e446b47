"""Registered experiments: one per validation figure plus the acceptance suite.

Each experiment maps an :class:`~uarelay.config.ExperimentConfig` to a
:class:`ResultTable`. Random streams come from children of
``SeedSequence(config.seed)`` in a fixed order, so a table depends only on the
configuration and seed, never on the worker count. Wall time is measured by
the caller and kept out of the table so repeated runs are byte-identical.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .geometry import CellScenario, distance_cdf, simulate_link_distances
from .montecarlo import (
    SimOptions,
    empirical_distribution,
    estimate_coop_prob,
    simulate_trials,
)
from .numerics import dbm_to_watts
from .policies import coop_prob_geometric, coop_prob_hybrid
from .rates import (
    FixedDistances,
    FixedScenario,
    RandomRelay,
    RingUsers,
    analytic_rate_samples,
    summarize_rates,
)


class UnknownExperiment(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown experiment {self.name!r}; registered: {', '.join(experiment_ids())}"


@dataclass
class ResultTable:
    experiment: str
    columns: tuple
    rows: list

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


@dataclass(frozen=True)
class Experiment:
    id: str
    description: str
    columns: tuple
    runner: object


REGISTRY = {}


def register(exp_id, description, columns):
    def wrap(func):
        if exp_id in REGISTRY:
            raise ValueError(f"duplicate experiment id {exp_id}")
        REGISTRY[exp_id] = Experiment(exp_id, description, tuple(columns), func)
        return func

    return wrap


def _natural_key(exp_id):
    # fig4 < fig10; non-figure entries after the figures
    m = re.fullmatch(r"fig(\d+)", exp_id)
    return (0, int(m.group(1)), "") if m else (1, 0, exp_id)


def experiment_ids():
    return sorted(REGISTRY, key=_natural_key)


def list_experiments():
    """``(id, description)`` pairs, sorted by id."""
    return [(k, REGISTRY[k].description) for k in experiment_ids()]


def run_experiment(exp_id, config):
    try:
        exp = REGISTRY[exp_id]
    except KeyError:
        raise UnknownExperiment(exp_id) from None
    rows = exp.runner(config)
    for row in rows:
        if len(row) != len(exp.columns):
            raise AssertionError(f"{exp_id}: row width {len(row)} != {len(exp.columns)} columns")
    return ResultTable(exp_id, exp.columns, rows)


def _streams(config, k):
    return np.random.SeedSequence(config.seed).spawn(k)


def _grid(config, default):
    return tuple(config.grid) if config.grid is not None else tuple(default)


def _rate_pair(policy_a, policy_m, net, scenario, n, seq_a, seq_m, workers, options=SimOptions()):
    """Analytic and simulated per-draw rates for one sweep point."""
    ra, ca = analytic_rate_samples(policy_a, net, scenario, n, np.random.default_rng(seq_a))
    sim = simulate_trials(net, scenario, policy_m, n, seq_m, workers=workers, options=options)
    return summarize_rates(ra, ca), summarize_rates(sim["rate"], sim["cooperate"]), ra, sim["rate"]


# ---------------------------------------------------------------------------
# Distance laws
# ---------------------------------------------------------------------------


def _distance_rows(config, which):
    net = config.network
    n_layouts = max(1, math.ceil(config.n_trials / 10))
    (seq,) = _streams(config, 1)
    r1, r2 = simulate_link_distances(net, n_layouts, np.random.default_rng(seq))
    samples = np.sort(r1 if which == "direct" else r2)
    lam = net.lambda1 if which == "direct" else net.lambda2
    scale = 1.0 / math.sqrt(2 * math.pi * lam)
    grid = _grid(config, np.linspace(0.25, 3.5, 14) * scale)
    rows = []
    n = len(samples)
    for r in grid:
        emp = np.searchsorted(samples, r, side="right") / n
        rows.append((r, distance_cdf(which, r, net), emp, math.sqrt(emp * (1 - emp) / n)))
    return rows


@register("fig4", "Cooperation distance r2: Rayleigh CDF vs full PPP simulation",
          ("r_m", "cdf_analytic", "cdf_mc", "stderr"))
def fig4(config):
    return _distance_rows(config, "cooperation")


@register("fig5", "Direct distance r1: Rayleigh CDF vs full PPP simulation",
          ("r_m", "cdf_analytic", "cdf_mc", "stderr"))
def fig5(config):
    return _distance_rows(config, "direct")


# ---------------------------------------------------------------------------
# Cooperation probability
# ---------------------------------------------------------------------------


@register("fig6", "Cooperation probability vs idle/active density ratio (E2, E3 quadrature; E3 simulated)",
          ("ratio", "rho2_analytic", "rho3_analytic", "rho_mc", "stderr"))
def fig6(config):
    net = config.network
    ratios = _grid(config, (1, 2, 4, 6, 10))
    seqs = _streams(config, len(ratios))
    rows = []
    for ratio, seq in zip(ratios, seqs):
        cfg = net.replace(lambda2=ratio * net.lambda1)
        est, se = estimate_coop_prob("e3", cfg, config.n_trials, seq, workers=config.workers)
        rows.append((ratio, coop_prob_geometric(cfg.lambda1, cfg.lambda2),
                     coop_prob_hybrid(cfg.lambda1, cfg.lambda2, cfg.alpha), est, se))
    return rows


# ---------------------------------------------------------------------------
# Interference distribution
# ---------------------------------------------------------------------------


@register("fig7", "Gamma fits of interference at the BS (phase 1) and at a relay with D = Rc/2",
          ("term", "level", "q_w", "cdf_mc", "cdf_gamma_sample", "cdf_gamma_analytic", "ks_sample", "ks_analytic"))
def fig7(config):
    net = config.network
    rc = net.cell_radius
    scenario = CellScenario(rc / 2, rc / 2, math.pi / 3)  # equilateral: D = Rc/2
    levels = _grid(config, (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99))
    rows = []
    for term, seq in zip(("dest1", "relay"), _streams(config, 2)):
        rep = empirical_distribution(term, net, scenario, max(config.n_trials, 1000), seq, workers=config.workers)
        for p in levels:
            q = float(np.quantile(rep.samples, p))
            emp = np.searchsorted(rep.samples, q, side="right") / len(rep.samples)
            rows.append((term, p, q, emp, rep.fitted_cdf(q, "sample"), rep.fitted_cdf(q, "analytic"),
                         rep.ks_sample, rep.ks_analytic))
    return rows


def _two_sample_ks(a, b):
    return float(stats.ks_2samp(a, b).statistic)


@register("fig8", "Analytic vs simulated rate as transmit power grows (relay co-located with user)",
          ("r1_m", "p_dbm", "rate_analytic", "rate_mc", "stderr_mc", "rel_gap", "ks_rate"))
def fig8(config):
    net = config.network
    rc = net.cell_radius
    powers = _grid(config, (17, 20, 23, 26, 29, 32))
    positions = (0.5 * rc, 0.95 * rc)
    seqs = _streams(config, 2 * len(powers) * len(positions))
    rows = []
    k = 0
    for r1 in positions:
        for p in powers:
            cfg = net.replace(p_s=dbm_to_watts(p), p_r=dbm_to_watts(p))
            a, m, ra, rm = _rate_pair("e3", "e3", cfg, FixedScenario(r1, 0.0, 0.0), config.n_trials,
                                      seqs[k], seqs[k + 1], config.workers)
            k += 2
            rows.append((r1, p, a.mean, m.mean, m.stderr, (a.mean - m.mean) / m.mean, _two_sample_ks(ra, rm)))
    return rows


def _moving_relay(r1, d):
    """Relay on the source-BS line at distance ``d`` from the BS."""
    if d <= r1:
        return FixedScenario(r1, r1 - d, 0.0)
    return FixedScenario(r1, d - r1, math.pi)


@register("fig9", "Relay interference model vs relay-BS distance D (both readings of the relay position)",
          ("d_over_rc", "ks_relay_sample", "ks_relay_analytic",
           "rate_analytic_colocated", "rate_mc_colocated", "stderr_colocated",
           "rate_analytic_moving", "rate_mc_moving", "stderr_moving"))
def fig9(config):
    net = config.network
    rc = net.cell_radius
    deltas = _grid(config, (0.0, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.0))
    seqs = _streams(config, 5 * len(deltas))
    rows = []
    for i, delta in enumerate(deltas):
        s = seqs[5 * i:5 * i + 5]
        d = delta * rc
        # reading 1: r2 = 0, the user itself sits at distance D
        colocated = CellScenario(max(d, 1.0), 0.0)
        rep = empirical_distribution("relay", net, colocated, max(config.n_trials, 1000), s[0], workers=config.workers)
        a1, m1, _, _ = _rate_pair("e3", "e3", net, FixedScenario(colocated.r1, 0.0, 0.0), config.n_trials,
                                  s[1], s[2], config.workers)
        # reading 2: user fixed at Rc/2, relay moved along the user-BS line
        moving = _moving_relay(0.5 * rc, d)
        a2, m2, _, _ = _rate_pair("e1", "e1", net, moving, config.n_trials, s[3], s[4], config.workers)
        rows.append((delta, rep.ks_sample, rep.ks_analytic, a1.mean, m1.mean, m1.stderr, a2.mean, m2.mean, m2.stderr))
    return rows


# ---------------------------------------------------------------------------
# Rates vs relay position
# ---------------------------------------------------------------------------

RATIO_GRID = tuple(np.round(np.arange(0.05, 0.96, 0.05), 2))


@register("fig10", "Average rate vs r2/r1 for a cell-edge user (analytic E2/E3, simulated E1/E3)",
          ("ratio", "rate_e3_analytic", "rate_e2_analytic", "rate_e1_mc", "stderr_e1_mc",
           "rate_e3_mc", "stderr_e3_mc"))
def fig10(config):
    net = config.network
    r1 = config.r1 if config.r1 is not None else 260.0
    ratios = _grid(config, RATIO_GRID)
    seqs = _streams(config, 3 * len(ratios))
    rows = []
    for i, ratio in enumerate(ratios):
        scen = FixedDistances(r1, ratio * r1)
        # E2 and E3 share one stream so their curves differ only by the policy
        e3 = summarize_rates(*analytic_rate_samples("e3", net, scen, config.n_trials, np.random.default_rng(seqs[3 * i])))
        e2 = summarize_rates(*analytic_rate_samples("e2", net, scen, config.n_trials, np.random.default_rng(seqs[3 * i])))
        sim1 = simulate_trials(net, scen, "e1", config.n_trials, seqs[3 * i + 1], workers=config.workers)
        sim3 = simulate_trials(net, scen, "e3", config.n_trials, seqs[3 * i + 2], workers=config.workers)
        m1 = summarize_rates(sim1["rate"], sim1["cooperate"])
        m3 = summarize_rates(sim3["rate"], sim3["cooperate"])
        rows.append((ratio, e3.mean, e2.mean, m1.mean, m1.stderr, m3.mean, m3.stderr))
    return rows


@register("fig11", "Average rate vs r2/r1 for several cell radii (r1 = 120 m, 26 dBm)",
          ("cell_radius_m", "ratio", "rate_e3_analytic", "rate_e1_mc", "stderr_e1_mc"))
def fig11(config):
    net = config.network
    r1 = config.r1 if config.r1 is not None else 120.0
    ratios = _grid(config, RATIO_GRID[1::2])
    radii = (150.0, 300.0, 600.0)
    p = dbm_to_watts(26.0)
    seqs = _streams(config, 2 * len(radii) * len(ratios))
    rows = []
    k = 0
    for rc in radii:
        cfg = net.replace(cell_radius=rc, p_s=p, p_r=p)
        for ratio in ratios:
            scen = FixedDistances(r1, ratio * r1)
            a, m, _, _ = _rate_pair("e3", "e1", cfg, scen, config.n_trials, seqs[k], seqs[k + 1], config.workers)
            k += 2
            rows.append((rc, ratio, a.mean, m.mean, m.stderr))
    return rows


# ---------------------------------------------------------------------------
# Rate gains
# ---------------------------------------------------------------------------

IDEAL_FRACTION = 0.4


def rate_gains(net, r1, n, seq):
    """Direct rate and relaying gains of a user at ``r1`` (analytic path).

    The baseline is a network where nobody relays. ``averaged`` draws the
    relay as the nearest idle user; ``ideal`` puts it on the user-BS line at
    0.4 of the distance. Returns ``(direct, averaged, ideal)`` estimates.
    """
    seqs = seq.spawn(3)
    direct = summarize_rates(*analytic_rate_samples(None, net, FixedScenario(r1, 0.0, 0.0), n, np.random.default_rng(seqs[0])))
    avg = summarize_rates(*analytic_rate_samples("e3", net, RandomRelay(r1), n, np.random.default_rng(seqs[1])))
    ideal = summarize_rates(*analytic_rate_samples(
        "e3", net, FixedScenario(r1, IDEAL_FRACTION * r1, 0.0), n, np.random.default_rng(seqs[2])))
    return direct, avg, ideal


@register("fig12", "Rate gain vs user-BS distance: averaged over relay positions and ideal relay position",
          ("r1_m", "rate_direct", "rate_averaged", "rate_ideal", "gain_averaged", "gain_ideal"))
def fig12(config):
    net = config.network
    rc = net.cell_radius
    r1_grid = _grid(config, np.round(np.linspace(0.05, 0.95, 10) * rc, 6))
    seqs = _streams(config, len(r1_grid))
    rows = []
    for r1, seq in zip(r1_grid, seqs):
        d, a, i = rate_gains(net, r1, config.n_trials, seq)
        rows.append((r1, d.mean, a.mean, i.mean, a.mean / d.mean - 1, i.mean / d.mean - 1))
    return rows


def ring_gain(net, outer_share, n, seq):
    """Relaying gain for users uniform over the outer ``outer_share`` of the cell radius."""
    rc = net.cell_radius
    ring = RingUsers((1 - outer_share) * rc, rc)
    s_direct, s_relay = seq.spawn(2)
    direct = summarize_rates(*analytic_rate_samples(None, net, ring, n, np.random.default_rng(s_direct)))
    relay = summarize_rates(*analytic_rate_samples("e3", net, ring, n, np.random.default_rng(s_relay)))
    return relay.mean / direct.mean - 1


@register("fig13", "Rate gain of outer-third and outer-half users vs density ratio, two cell radii",
          ("cell_radius_m", "ratio", "gain_outer_third", "gain_outer_half"))
def fig13(config):
    net = config.network
    ratios = _grid(config, (1, 2, 4, 6, 8))
    radii = (net.cell_radius, 2 * net.cell_radius)
    seqs = _streams(config, len(radii) * len(ratios))
    rows = []
    k = 0
    for rc in radii:
        for ratio in ratios:
            cfg = net.replace(cell_radius=rc, lambda2=ratio * net.lambda1)
            third, half = seqs[k].spawn(2)
            k += 1
            rows.append((rc, ratio, ring_gain(cfg, 1 / 3, config.n_trials, third),
                         ring_gain(cfg, 1 / 2, config.n_trials, half)))
    return rows


@register("acceptance", "Acceptance suite: one row per criterion with measured value and verdict",
          ("criterion", "name", "passed", "measured", "threshold", "detail"))
def acceptance(config):
    from .acceptance import run_all

    return [(r.number, r.name, r.passed, r.measured, r.threshold, r.detail)
            for r in run_all(seed=config.seed, workers=config.workers)]
