"""Brute-force network simulation used as the oracle for the analytic model.

Interferers are drawn as a PPP on the annulus [Rc, R_max] around the study
BS, which sits at the origin. Each interferer cooperates with probability
rho1; cooperating pairs send the full phase-2 superposition, including the
random-phase cross term between the source and its relay. Out-of-cell relays
are co-located with their sources unless ``true_relay_positions`` is set.

Trials are processed in fixed-size chunks. Chunk ``i`` always draws from the
``i``-th child of one root ``SeedSequence``, so results do not depend on the
number of worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .geometry import Annulus, CellScenario, relay_to_bs_distance
from .interference import (
    GammaParams,
    PowerProfile,
    RelaySingularityError,
    gamma_cdf,
    gamma_fit,
    gamma_fit_samples,
    moments_destination,
    moments_relay,
    zeta_coefficients,
)
from .policies import PolicyKind, geometric_mask, hybrid_mask, network_rho1
from .rates import (
    TypicalUser,
    as_distribution,
    policy_gated_rate,
    policy_mask,
    study_channels,
    summarize_rates,
)

CHUNK_TRIALS = 512
COOP_CHUNK = 1 << 16
TERMS = ("dest1", "dest2", "relay")


@dataclass(frozen=True)
class TrialResult:
    q_d_b: float
    q_d_m: float
    q_r: float
    cooperate: bool
    rate: float
    scenario: CellScenario
    seed: int


@dataclass(frozen=True)
class SimOptions:
    """Switches of the interferer model.

    ``cross_term=False`` drops the coherent source/relay term of the
    phase-2 interference (its angle-averaged form). ``interferer_intensity``
    overrides lambda1 for the interferer field only, so an empty field can be
    simulated. ``rho1`` overrides the interferer cooperation probability.
    """

    cross_term: bool = True
    true_relay_positions: bool = False
    interferer_intensity: float | None = None
    rho1: float | None = None
    inner: float | None = None
    outer: float | None = None


def root_seed(rng):
    """SeedSequence for a run from an int seed, a SeedSequence or a Generator."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(rng.integers(0, 2**63, size=4).tolist())
    if rng is None:
        raise ValueError("a seed or Generator is required for reproducible runs")
    return np.random.SeedSequence(int(rng))


def _chunk_sizes(n, chunk):
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _run_chunks(func, tasks, workers):
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def _resolve(config, options, rho1):
    intensity = config.lambda1 if options.interferer_intensity is None else options.interferer_intensity
    if intensity < 0:
        raise ValueError("interferer intensity must be >= 0")
    if rho1 is None:
        rho1 = network_rho1(config) if options.rho1 is None else options.rho1
    inner = config.cell_radius if options.inner is None else options.inner
    outer = config.r_max if options.outer is None else options.outer
    return intensity, rho1, Annulus(inner, outer)


def simulate_interference(config, relay_xy, rng, options=SimOptions(), rho1=None, profile=None):
    """Interference powers (Q_d^b, Q_d^m, Q_r) for one field per row of ``relay_xy``.

    ``relay_xy`` holds the study relay position of each trial (BS at origin).
    Returns three arrays of length ``len(relay_xy)``.
    """
    relay_xy = np.atleast_2d(np.asarray(relay_xy, dtype=float))
    n = len(relay_xy)
    intensity, rho1, window = _resolve(config, options, rho1)
    profile = profile or PowerProfile.from_config(config)
    a = float(config.alpha)

    counts = rng.poisson(intensity * window.area, size=n)
    owner = np.repeat(np.arange(n), counts)
    total = int(counts.sum())
    rad = window.sample_radii(total, rng)
    ang = rng.uniform(0.0, 2 * np.pi, size=total)
    coop = rng.uniform(size=total) < rho1
    g_sd, g_rd, g_sr = rng.exponential(size=(3, total))
    dphase = rng.uniform(0.0, 2 * np.pi, size=total)

    x, y = rad * np.cos(ang), rad * np.sin(ang)
    path_bs = rad ** (-a)
    phase1 = np.where(coop, profile.p_s_b, profile.p_s)
    q_d_b = np.bincount(owner, weights=g_sd * path_bs * phase1, minlength=n)

    if options.true_relay_positions and config.lambda2 > 0:
        off = rng.rayleigh(1.0 / math.sqrt(2 * math.pi * config.lambda2), size=total)
        off_ang = rng.uniform(0.0, 2 * np.pi, size=total)
        path_rel = np.hypot(x + off * np.cos(off_ang), y + off * np.sin(off_ang)) ** (-a)
    else:
        path_rel = path_bs
    src = g_sd * path_bs
    rel = g_rd * path_rel
    coherent = profile.p_s_m * src + profile.p_r_m * rel
    if options.cross_term:
        coherent = coherent + 2 * np.sqrt(src * rel * profile.p_s_m1 * profile.p_r_m) * np.cos(dphase)
    phase2 = np.where(coop, coherent, profile.p_s * src)
    q_d_m = np.bincount(owner, weights=phase2, minlength=n)

    dx = x - relay_xy[owner, 0]
    dy = y - relay_xy[owner, 1]
    q_r = np.bincount(owner, weights=g_sr * (dx * dx + dy * dy) ** (-0.5 * a) * phase1, minlength=n)
    # float summation can leave -0.0 style residue on the cross term only
    return q_d_b, np.maximum(q_d_m, 0.0), q_r


def _relay_xy(r1, r2, psi0):
    ang = np.pi + psi0
    return np.column_stack((r1 + r2 * np.cos(ang), r2 * np.sin(ang)))


def _trial_chunk(task):
    config, distribution, policy, n, seq, options, rho1, with_rate = task
    rng = np.random.default_rng(seq)
    r1, r2, psi0 = (np.asarray(v, dtype=float) for v in distribution.sample(n, rng, config))
    d = relay_to_bs_distance(r1, r2, psi0)
    q_d_b, q_d_m, q_r = simulate_interference(config, _relay_xy(r1, r2, psi0), rng, options, rho1)
    out = {"r1": r1, "r2": r2, "psi0": psi0, "d": d, "q_d_b": q_d_b, "q_d_m": q_d_m, "q_r": q_r}
    if with_rate:
        g_sd, g_sr, g_rd = rng.exponential(size=(3, n))
        ch = study_channels(config, r1, r2, d, g_sd, g_sr, g_rd, q_r, q_d_b, q_d_m)
        coop = policy_mask(policy, r1, r2, d, g_sd, g_sr, ch, config.alpha)
        out["cooperate"] = coop
        out["rate"] = policy_gated_rate(ch, coop, config.p_s, config.p_r, config.alpha1)
    return out


def simulate_trials(config, scenarios, study_policy, n, rng, workers=1, options=SimOptions(),
                    with_rate=True, chunk=CHUNK_TRIALS):
    """Run ``n`` independent trials; returns a dict of per-trial arrays.

    ``study_policy`` of ``None`` models a network without relaying: the study
    user transmits directly and, unless ``options.rho1`` says otherwise, no
    interferer cooperates either.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    distribution = as_distribution(scenarios)
    policy = None if study_policy is None else PolicyKind.parse(study_policy)
    rho1 = 0.0 if policy is None and options.rho1 is None else None
    sizes = _chunk_sizes(n, chunk)
    seqs = root_seed(rng).spawn(len(sizes))
    tasks = [(config, distribution, policy, k, s, options, rho1, with_rate) for k, s in zip(sizes, seqs)]
    parts = _run_chunks(_trial_chunk, tasks, workers)
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def simulate_trial(config, scenario, study_policy, rng, options=SimOptions()):
    """One network realisation around ``scenario``; reproducible from ``seed``."""
    if not isinstance(scenario, CellScenario):
        raise TypeError("scenario must be a CellScenario")
    seed = int(rng.integers(0, 2**63)) if isinstance(rng, np.random.Generator) else int(rng)
    res = simulate_trials(config, scenario, study_policy, 1, seed, options=options)
    return TrialResult(
        q_d_b=float(res["q_d_b"][0]),
        q_d_m=float(res["q_d_m"][0]),
        q_r=float(res["q_r"][0]),
        cooperate=bool(res["cooperate"][0]),
        rate=float(res["rate"][0]),
        scenario=scenario,
        seed=seed,
    )


def simulate_rates(policy, config, scenarios, n_draws, rng, workers=1, options=SimOptions()):
    """Monte Carlo counterpart of :func:`uarelay.rates.average_rate`."""
    res = simulate_trials(config, scenarios, policy, n_draws, rng, workers=workers, options=options)
    return summarize_rates(res["rate"], res["cooperate"])


# ---------------------------------------------------------------------------
# Cooperation frequencies
# ---------------------------------------------------------------------------


def _coop_chunk(task):
    config, policy, n, seq = task
    rng = np.random.default_rng(seq)
    r1, r2, psi0 = TypicalUser().sample(n, rng, config)
    d = relay_to_bs_distance(r1, r2, psi0)
    if policy is PolicyKind.GEOMETRIC:
        return int(geometric_mask(r1, r2, d).sum())
    g_sd, g_sr = rng.exponential(size=(2, n))
    return int(hybrid_mask(r1, r2, d, g_sd, g_sr, config.alpha).sum())


def estimate_coop_prob(policy, config, n, rng, workers=1):
    """Fraction of typical users for which ``policy`` relays, with binomial SE.

    Distances are Rayleigh with the two user densities and the relay
    direction is uniform. The ideal policy needs interference and runs
    through the full trial simulator.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    policy = PolicyKind.parse(policy)
    if config.lambda2 == 0:
        return 0.0, 0.0
    if policy is PolicyKind.IDEAL:
        res = simulate_trials(config, TypicalUser(), policy, n, rng, workers=workers)
        hits = int(res["cooperate"].sum())
    else:
        sizes = _chunk_sizes(n, COOP_CHUNK)
        seqs = root_seed(rng).spawn(len(sizes))
        hits = sum(_run_chunks(_coop_chunk, [(config, policy, k, s) for k, s in zip(sizes, seqs)], workers))
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


# ---------------------------------------------------------------------------
# Distribution checks
# ---------------------------------------------------------------------------


@dataclass
class DistributionReport:
    """Empirical law of one interference term against its Gamma models.

    ``analytic_fit`` is ``None`` when the analytic moments do not exist
    (relay on the cell edge); ``flagged`` marks that case and any KS distance
    above ``ks_threshold``.
    """

    term: str
    samples: np.ndarray
    ecdf: np.ndarray
    sample_fit: GammaParams
    analytic_fit: GammaParams | None
    ks_sample: float
    ks_analytic: float
    flagged: bool

    def fitted_cdf(self, q, which="analytic"):
        params = self.analytic_fit if which == "analytic" else self.sample_fit
        return gamma_cdf(q, params)


def analytic_term_fit(term, config, scenario, profile=None, rho1=None):
    profile = profile or PowerProfile.from_config(config)
    rho1 = network_rho1(config) if rho1 is None else rho1
    z = zeta_coefficients(rho1, profile)
    if term == "dest1":
        return gamma_fit(moments_destination(1, config, z))
    if term == "dest2":
        return gamma_fit(moments_destination(2, config, z))
    return gamma_fit(moments_relay(config, z, scenario.d_relay_bs))


def empirical_distribution(term, config, scenario, n, rng, workers=1, options=SimOptions(), ks_threshold=0.03):
    """Empirical CDF of one interference term with sample- and analytic-moment Gamma fits."""
    if term not in TERMS:
        raise ValueError(f"unknown term {term!r}; expected one of {', '.join(TERMS)}")
    if n < 1000:
        raise ValueError("n must be >= 1000")
    key = {"dest1": "q_d_b", "dest2": "q_d_m", "relay": "q_r"}[term]
    res = simulate_trials(config, scenario, None, n, rng, workers=workers, with_rate=False,
                          options=_with_network_rho(options, config))
    samples = np.sort(res[key])
    ecdf = np.arange(1, n + 1) / n
    sample_fit = gamma_fit_samples(samples)
    ks_sample = stats.kstest(samples, lambda q: gamma_cdf(q, sample_fit)).statistic
    try:
        analytic_fit = analytic_term_fit(term, config, scenario, rho1=_with_network_rho(options, config).rho1)
    except RelaySingularityError:
        analytic_fit = None
    if analytic_fit is None:
        ks_analytic = math.nan
    else:
        ks_analytic = stats.kstest(samples, lambda q: gamma_cdf(q, analytic_fit)).statistic
    flagged = analytic_fit is None or ks_analytic > ks_threshold
    return DistributionReport(term, samples, ecdf, sample_fit, analytic_fit, float(ks_sample),
                              float(ks_analytic), bool(flagged))


def _with_network_rho(options, config):
    if options.rho1 is not None:
        return options
    fields = {f: getattr(options, f) for f in options.__dataclass_fields__}
    fields["rho1"] = network_rho1(config)
    return SimOptions(**fields)


def truncation_sensitivity(config, n, rng, workers=1):
    """Relative change of the mean destination interference when R_max doubles.

    The shell [R_max, 2 R_max] is an independent PPP, so its mean power over
    that of [Rc, R_max] is exactly the relative change. Returns
    ``(change, stderr)`` for Q_d^b.
    """
    seq_inner, seq_shell = root_seed(rng).spawn(2)
    base = SimOptions(rho1=network_rho1(config))
    scen = CellScenario(config.cell_radius / 2, 0.0)
    inner = simulate_trials(config, scen, None, n, seq_inner, workers, base, with_rate=False)["q_d_b"]
    shell_opts = SimOptions(rho1=base.rho1, inner=config.r_max, outer=2 * config.r_max)
    shell = simulate_trials(config, scen, None, n, seq_shell, workers, shell_opts, with_rate=False)["q_d_b"]
    ratio = shell.mean() / inner.mean()
    # delta method on a ratio of independent means
    se = ratio * math.sqrt((shell.std(ddof=1) / shell.mean()) ** 2 / n + (inner.std(ddof=1) / inner.mean()) ** 2 / n)
    return float(ratio), float(se)


def sweep(descriptor, config, **kwargs):
    """Run a registered experiment; see :mod:`uarelay.experiments`."""
    from .experiments import run_experiment

    return run_experiment(descriptor, config, **kwargs)
