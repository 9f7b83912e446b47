"""Flat ``key = value`` experiment configuration files.

Lines starting with ``#`` and blank lines are ignored; a trailing ``# ...``
on a value line is a comment. Every key must be known. Units are fixed by
the key name: metres, watts, dBm and users per square metre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import NetworkConfig
from .numerics import db_to_linear, dbm_to_watts

DEFAULT_LAMBDA1 = 1.0 / (16 * 150.0**2)
DEFAULT_SNR_DB = 15.0


class ConfigError(ValueError):
    """Malformed, unknown or inconsistent configuration entry."""


def _float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value


def _int(key, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _text(key, text):
    if not text:
        raise ConfigError(f"{key}: empty value")
    return text


def _grid(key, text):
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: empty grid")
    return tuple(_float(key, p) for p in parts)


KEYS = {
    "lambda1": _float,
    "lambda2": _float,
    "lambda_ratio": _float,
    "alpha": _float,
    "cell_radius_m": _float,
    "p_max_dbm": _float,
    "p_relay_dbm": _float,
    "sigma2_w": _float,
    "snr_db": _float,
    "alpha1": _float,
    "rho1_mode": _text,
    "rmax_factor": _float,
    "common_fraction": _float,
    "n_trials": _int,
    "seed": _int,
    "grid": _grid,
    "r1_m": _float,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings of one experiment run."""

    network: NetworkConfig
    n_trials: int = 20_000
    seed: int = 0
    grid: tuple | None = None
    r1: float | None = None
    workers: int = 1
    raw: dict = field(default_factory=dict, compare=False)

    def with_seed(self, seed):
        return ExperimentConfig(self.network, self.n_trials, seed, self.grid, self.r1, self.workers, self.raw)

    def with_workers(self, workers):
        return ExperimentConfig(self.network, self.n_trials, self.seed, self.grid, self.r1, workers, self.raw)

    def resolved(self):
        """Plain-dict view used for provenance records."""
        net = self.network
        return {
            "lambda1": net.lambda1,
            "lambda2": net.lambda2,
            "alpha": net.alpha,
            "cell_radius_m": net.cell_radius,
            "p_s_w": net.p_s,
            "p_r_w": net.p_r,
            "sigma2_w": net.noise_power,
            "alpha1": net.alpha1,
            "rho1_mode": net.rho1_mode,
            "rho1": net.rho1,
            "rmax_factor": net.rmax_factor,
            "r_max_m": net.r_max,
            "common_fraction": net.common_fraction,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "grid": list(self.grid) if self.grid is not None else None,
            "r1_m": self.r1,
        }


def parse_text(text):
    """Parse config text into a ``{key: value}`` dict of typed values."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (p.strip() for p in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}; known keys: {', '.join(sorted(KEYS))}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = KEYS[key](key, value)
    return values


def build(values):
    """Turn parsed values into an :class:`ExperimentConfig` with defaults filled in."""
    if "sigma2_w" in values and "snr_db" in values:
        raise ConfigError("give either sigma2_w or snr_db, not both")
    if "lambda2" in values and "lambda_ratio" in values:
        raise ConfigError("give either lambda2 or lambda_ratio, not both")
    lam1 = values.get("lambda1", DEFAULT_LAMBDA1)
    lam2 = values.get("lambda2", values.get("lambda_ratio", 2.0) * lam1)
    alpha = values.get("alpha", 4.0)
    rc = values.get("cell_radius_m", 1.0 / (2.0 * math.sqrt(lam1)) if lam1 > 0 else 1.0)
    p_s = dbm_to_watts(values.get("p_max_dbm", 23.0))
    p_r = dbm_to_watts(values["p_relay_dbm"]) if "p_relay_dbm" in values else p_s
    if "sigma2_w" in values:
        sigma2 = values["sigma2_w"]
    else:
        # SNR of the direct link at the cell edge, without fading or interference
        sigma2 = p_s * rc ** (-alpha) / db_to_linear(values.get("snr_db", DEFAULT_SNR_DB))

    mode = values.get("rho1_mode", "e3").strip().lower()
    rho1 = None
    if mode.startswith("fixed"):
        _, _, tail = mode.partition(":")
        if not tail:
            raise ConfigError("rho1_mode fixed needs a value, e.g. fixed:0.25")
        rho1 = _float("rho1_mode", tail)
        mode = "fixed"
    elif mode not in ("e2", "e3"):
        raise ConfigError(f"rho1_mode must be e2, e3 or fixed:<value>, got {mode!r}")

    try:
        network = NetworkConfig(
            lambda1=lam1,
            lambda2=lam2,
            alpha=alpha,
            cell_radius=rc,
            noise_power=sigma2,
            p_s=p_s,
            p_r=p_r,
            alpha1=values.get("alpha1", 0.5),
            rho1=rho1,
            rho1_mode=mode,
            rmax_factor=values.get("rmax_factor"),
            common_fraction=values.get("common_fraction", 0.5),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n_trials = values.get("n_trials", 20_000)
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    seed = values.get("seed", 0)
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    return ExperimentConfig(network, n_trials, seed, values.get("grid"), values.get("r1_m"), 1, dict(values))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return build(parse_text(fh.read()))


def default_config():
    return build({})
