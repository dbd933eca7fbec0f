"""Synthetic panels with a known data-generating process.

Climate follows a stable seasonal VAR(1) on a standardized scale, mapped to
physical units per covariate. Relative risk is ZAGA with

    log mu_t = b0 + b_rr * RR_{t-1} + sum_j g_j * sum_l w_l z_j(t - l) + s_{month(t)}

where ``w`` decays linearly over lags ``0..max_lag``: an effect that a cross
basis with a linear lag basis represents exactly. Cases are Poisson draws
with mean ``RR * population * national incidence``; national rows add a
rest-of-country population on top of the cantons. The autoregressive input
is capped at ``rr_cap`` so a heavy gamma draw cannot start a runaway.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnstableGenerator, ValidationError
from .panel import CLIMATE_VARS, CantonData, CantonSeries, MonthIndex, MonthlyPanel, month_range

# centre and scale mapping the standardized VAR state to each covariate
CLIMATE_UNITS = {
    "precip": (200.0, 80.0),
    "ssta": (0.0, 0.8),
    "ndvi": (0.6, 0.1),
    "lst": (300.0, 2.0),
    "tna": (0.0, 0.4),
}


def default_climate_var() -> np.ndarray:
    A = np.diag([0.5, 0.85, 0.6, 0.55, 0.8])
    A[0, 1] = 0.1   # ENSO anomaly feeds rainfall
    A[2, 0] = 0.15  # rainfall greens vegetation
    A[3, 2] = -0.1  # vegetation cools the surface
    return A


@dataclass(frozen=True)
class SimConfig:
    n_cantons: int = 32
    n_months: int = 252
    start: MonthIndex = MonthIndex(2000, 1)
    max_lag: int = 18
    zero_rate: float = 0.16
    sigma: float = 0.5
    rr_ar: float = 0.1
    rr_cap: float = 5.0
    climate_scale: float = 1.0
    climate_effects: tuple[float, ...] | None = None  # fixed effects for every canton instead of random draws
    seasonal_amplitude: float = 0.6
    intercept: float | None = None
    climate_var: np.ndarray = field(default_factory=default_climate_var)
    climate_noise: float = 0.6
    climate_seasonal: float = 0.8
    population_range: tuple[float, float] = (5e4, 2e5)
    rest_population: float = 2e6
    incidence: float = 2e-3
    burn_in: int = 60

    def __post_init__(self):
        if self.n_cantons < 2:
            raise ValidationError("need at least 2 cantons")
        if self.n_months < 60:
            raise ValidationError("need at least 60 months")
        if not 0 <= self.zero_rate < 1:
            raise ValidationError("zero_rate must lie in [0, 1)")
        A = np.asarray(self.climate_var, dtype=float)
        if A.shape != (len(CLIMATE_VARS),) * 2:
            raise ValidationError("climate_var must be 5 x 5")
        if self.climate_effects is not None and len(self.climate_effects) != len(CLIMATE_VARS):
            raise ValidationError("climate_effects needs one value per climate covariate")


@dataclass
class CantonTruth:
    intercept: float
    rr_ar: float
    climate_effects: np.ndarray  # (5,) on the standardized scale
    seasonal: np.ndarray  # (12,) additive log-mu effect per month of year
    sigma: float
    nu: float
    mu: np.ndarray  # latent location per panel month
    rr_latent: np.ndarray
    population: int


@dataclass
class SimTruth:
    config: SimConfig
    seed: int
    lag_weights: np.ndarray
    climate_var: np.ndarray
    cantons: dict[str, CantonTruth]


def lag_weights(max_lag: int) -> np.ndarray:
    w = 1.0 - np.arange(max_lag + 1) / (max_lag + 1)
    return w / w.sum()


def _climate_path(cfg: SimConfig, rng: np.random.Generator, months: np.ndarray) -> np.ndarray:
    """Standardized climate state for ``len(months)`` months (burn-in discarded)."""
    A = np.asarray(cfg.climate_var, dtype=float)
    k = A.shape[0]
    phase = rng.uniform(0, 2 * np.pi, k)
    total = len(months) + cfg.burn_in
    z = np.zeros((total, k))
    # months for the burn-in run backwards from the first panel month
    first = int(months[0])
    back = (first - 1 - np.arange(cfg.burn_in, 0, -1)) % 12 + 1
    mseq = np.concatenate([back, months])
    for t in range(1, total):
        season = cfg.climate_seasonal * np.cos(2 * np.pi * mseq[t] / 12 + phase)
        z[t] = (np.eye(k) - A) @ season + A @ z[t - 1] + cfg.climate_noise * rng.normal(size=k)
    return z


def simulate_panel(cfg: SimConfig = SimConfig(), seed: int = 0) -> tuple[MonthlyPanel, SimTruth]:
    A = np.asarray(cfg.climate_var, dtype=float)
    if np.max(np.abs(np.linalg.eigvals(A))) >= 1:
        raise UnstableGenerator("declared climate VAR has spectral radius >= 1")
    months = month_range(cfg.start, cfg.start + (cfg.n_months - 1))
    month_no = np.array([m.month for m in months])
    T, L = cfg.n_months, cfg.max_lag
    w = lag_weights(L)
    streams = np.random.SeedSequence(seed).spawn(cfg.n_cantons + 1)
    nat_rng = np.random.default_rng(streams[-1])
    nat_phase = nat_rng.uniform(0, 2 * np.pi)
    incidence = cfg.incidence * np.exp(0.3 * np.cos(2 * np.pi * month_no / 12 + nat_phase))

    width = len(str(cfg.n_cantons))
    cantons, truths = {}, {}
    case_total = np.zeros(T, dtype=np.int64)
    pop_total = np.zeros(T, dtype=np.int64)
    for c in range(cfg.n_cantons):
        cid = f"canton_{c + 1:0{width}d}"
        rng = np.random.default_rng(streams[c])
        z = _climate_path(cfg, rng, month_no)  # (burn_in + T, 5)
        phys = np.empty((T, len(CLIMATE_VARS)))
        for j, name in enumerate(CLIMATE_VARS):
            centre, scale = CLIMATE_UNITS[name]
            phys[:, j] = centre + scale * z[cfg.burn_in:, j]
        phys[:, 0] = np.maximum(phys[:, 0], 0.0)
        phys[:, 2] = np.clip(phys[:, 2], -1.0, 1.0)

        gamma = cfg.climate_scale * rng.normal(0.0, 0.25, len(CLIMATE_VARS))
        if cfg.climate_effects is not None:
            gamma = np.asarray(cfg.climate_effects, dtype=float)
        s_phase = rng.uniform(0, 2 * np.pi)
        seasonal = cfg.seasonal_amplitude * np.cos(2 * np.pi * np.arange(1, 13) / 12 + s_phase)
        b0 = -cfg.rr_ar if cfg.intercept is None else cfg.intercept
        lagged = np.stack([z[cfg.burn_in - l: cfg.burn_in - l + T] for l in range(L + 1)])  # (L+1, T, 5)
        climate_eta = np.einsum("l,ltj,j->t", w, lagged, gamma)

        k = 1.0 / cfg.sigma ** 2
        mu = np.empty(T)
        rr = np.empty(T)
        prev = 1.0
        for t in range(T):
            mu[t] = np.exp(b0 + cfg.rr_ar * prev + climate_eta[t] + seasonal[month_no[t] - 1])
            draw = rng.gamma(k, mu[t] / k)
            rr[t] = 0.0 if rng.random() < cfg.zero_rate else draw
            prev = min(rr[t], cfg.rr_cap)

        lo, hi = cfg.population_range
        pop0 = rng.uniform(lo, hi)
        population = np.round(pop0 * 1.01 ** (np.arange(T) / 12)).astype(np.int64)
        cases = rng.poisson(rr * population * incidence).astype(np.int64)
        cantons[cid] = CantonData(CantonSeries(cid, months, cases, population), phys)
        truths[cid] = CantonTruth(b0, cfg.rr_ar, gamma, seasonal, cfg.sigma, cfg.zero_rate,
                                  mu, rr, int(population[0]))
        case_total += cases
        pop_total += population

    rest_pop = np.round(cfg.rest_population * 1.01 ** (np.arange(T) / 12)).astype(np.int64)
    rest_cases = nat_rng.poisson(rest_pop * incidence)
    panel = MonthlyPanel(months, cantons, case_total + rest_cases, pop_total + rest_pop)
    return panel, SimTruth(cfg, seed, w, A, truths)
