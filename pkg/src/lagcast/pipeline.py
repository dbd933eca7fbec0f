"""Per-canton fitting, recursive forecasting, bootstrap intervals and scoring.

A canton run sees only its training window: relative risk and five climate
cross-bases feed a shared design, GAMLSS and/or random forest are fitted on
it, a VAR forecasts the climate, and risk is forecast recursively with each
predicted value feeding the next step's autoregressive term. Prediction
intervals come from a circular block bootstrap of the in-sample residuals
with a refit per replicate.
"""
from __future__ import annotations

import os
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .basis import BasisSpec, CrossBasis, cross_basis
from .errors import (
    HorizonExceedsVar,
    LagcastError,
    MissingObservations,
    PreconditionError,
    TooFewResiduals,
    ValidationError,
)
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest
from .gamlss import DesignMatrix, ZagaFit, assemble_design, design_row, fit_zaga, predict_response
from .metrics import MethodScore, ScoredForecast, best_model, nis, nrmse
from .panel import CLIMATE_VARS, MonthIndex, MonthlyPanel, RiskSeries, compute_relative_risk
from .var import VarForecast, VarModel, fit_var, forecast_var, select_lag_bic

METHODS = ("gamlss", "rf")


def default_bases() -> dict[str, tuple[BasisSpec, BasisSpec]]:
    spline = BasisSpec("bspline", degree=3, df=4)
    lin = BasisSpec("linear")
    return {"precip": (spline, lin), "ssta": (spline, lin),
            "ndvi": (lin, lin), "lst": (lin, lin), "tna": (lin, lin)}


@dataclass(frozen=True)
class CantonSpec:
    bases: Mapping[str, tuple[BasisSpec, BasisSpec]] = field(default_factory=default_bases)
    max_lag: int = 18
    methods: tuple[str, ...] = METHODS
    train_start: MonthIndex | None = None
    train_end: MonthIndex | None = None
    horizon: int = 3
    n_boot: int = 100
    block: int = 6
    seed: int = 0
    forest: ForestConfig = field(default_factory=ForestConfig)
    point: str = "mean"
    alpha: float = 0.95
    var_p_max: int = 13
    var_trend: bool = True
    var_seasonal: bool = True
    var_standardize: bool = False

    def __post_init__(self):
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValidationError(f"methods must be a non-empty subset of {METHODS}")
        if set(self.bases) != set(CLIMATE_VARS):
            raise ValidationError(f"bases must be given for exactly {CLIMATE_VARS}")
        if self.horizon < 1 or self.n_boot < 0 or self.block < 1 or self.max_lag < 0:
            raise ValidationError("horizon, block must be >= 1; n_boot, max_lag >= 0")


def derive_seed(seed: int, *keys: str) -> int:
    """Stable 63-bit seed for a ``(seed, key, ...)`` combination."""
    seed = int(seed)
    words = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF] + [zlib.crc32(k.encode()) for k in keys]
    hi, lo = np.random.SeedSequence(words).generate_state(2)
    return ((int(hi) << 32) | int(lo)) >> 1


@dataclass
class CantonFit:
    canton_id: str
    months: tuple[MonthIndex, ...]
    risk: RiskSeries
    climate: np.ndarray
    crossbases: tuple[CrossBasis, ...]
    design: DesignMatrix
    y: np.ndarray
    fits: dict[str, ZagaFit | ForestModel]
    fitted: dict[str, np.ndarray]
    spec: CantonSpec


def _train_panel(panel: MonthlyPanel, spec: CantonSpec) -> MonthlyPanel:
    start = spec.train_start or panel.months[0]
    end = spec.train_end or panel.months[-1]
    return panel.window(start, end)


def fit_method(method: str, design: DesignMatrix, y: np.ndarray, spec: CantonSpec, seed: int):
    if method == "gamlss":
        return fit_zaga(design, y)
    if method == "rf":
        return fit_forest(design, y, replace(spec.forest, seed=seed))
    raise ValidationError(f"unknown method {method!r}")


def predict_method(method: str, fit, X: np.ndarray, spec: CantonSpec) -> np.ndarray:
    X = np.atleast_2d(X)
    if method == "gamlss":
        return predict_response(fit, X, spec.point)[1]
    return predict_forest(fit, X)


def fit_canton(panel: MonthlyPanel, canton_id: str, spec: CantonSpec = CantonSpec(),
               fits: Mapping[str, ZagaFit | ForestModel] | None = None) -> CantonFit:
    """Build the shared design on the training window and fit each method.

    Pre-computed ``fits`` (e.g. loaded from disk) are used instead of refitting.
    """
    train = _train_panel(panel, spec)
    T = len(train.months)
    if T <= spec.max_lag + 13:
        raise PreconditionError(f"training window of {T} months must exceed max_lag + 13 = {spec.max_lag + 13}")
    risk = compute_relative_risk(train, canton_id)
    climate = np.asarray(train[canton_id].climate)
    cbs = tuple(cross_basis(climate[:, j], spec.max_lag, *spec.bases[name], name=name)
                for j, name in enumerate(CLIMATE_VARS))
    design, y = assemble_design(risk, cbs)
    out, fitted = {}, {}
    for method in spec.methods:
        if fits is not None and method in fits:
            model = fits[method]
        else:
            model = fit_method(method, design, y, spec, derive_seed(spec.seed, canton_id, method))
        out[method] = model
        fitted[method] = np.maximum(predict_method(method, model, design.values, spec), 0.0)
    return CantonFit(canton_id, train.months, risk, climate, cbs, design, y, out, fitted, spec)


def fit_climate_var(cf: CantonFit) -> tuple[VarModel, tuple[np.ndarray, np.ndarray]]:
    """BIC-selected VAR on the training climate; returns the model and the (centre, scale) used."""
    spec = cf.spec
    x = cf.climate
    centre, scale = np.zeros(x.shape[1]), np.ones(x.shape[1])
    if spec.var_standardize:
        centre, scale = x.mean(axis=0), x.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    z = (x - centre) / scale
    months = [m.month for m in cf.months]
    p = select_lag_bic(z, spec.var_p_max, months, spec.var_trend, spec.var_seasonal)
    model = fit_var(z, p, months, spec.var_trend, spec.var_seasonal)
    return model, (centre, scale)


def forecast_climate(cf: CantonFit, model: VarModel, transform=None, h: int | None = None) -> VarForecast:
    h = cf.spec.horizon if h is None else h
    centre, scale = transform if transform is not None else (0.0, 1.0)
    z = (cf.climate - centre) / scale
    fc = forecast_var(model, z, h, len(cf.months), cf.months[-1].month)
    scale = np.broadcast_to(scale, (model.k,))
    cov = fc.cov * np.outer(scale, scale)[None]
    return VarForecast(fc.mean * scale + centre, cov, fc.lower * scale + centre, fc.upper * scale + centre)


def _future_crossbasis_rows(cf: CantonFit, climate_path: np.ndarray) -> list[np.ndarray]:
    ext = np.vstack([cf.climate, climate_path])
    T = len(cf.months)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # clamping to training boundaries is expected here
        return [cb.apply(ext[:, j]).matrix[T:] for j, cb in enumerate(cf.crossbases)]


def forecast_recursive(cf: CantonFit, climate: VarForecast | np.ndarray, method: str,
                       fit=None, future_resid: np.ndarray | None = None) -> np.ndarray:
    """Recursive ``h``-step risk path; each prediction becomes the next ``RR_{t-1}``.

    Climate enters as the VAR mean path. Predictions are clamped at zero. When
    ``future_resid`` is given the path is simulated instead: each step adds its
    residual (then clamps) before feeding the next step.
    """
    h = cf.spec.horizon
    path = climate.mean if isinstance(climate, VarForecast) else np.asarray(climate, dtype=float)
    if path.ndim != 2 or path.shape[1] != len(CLIMATE_VARS):
        raise ValidationError("climate path must be h x 5")
    if path.shape[0] < h:
        raise HorizonExceedsVar(f"horizon {h} exceeds the {path.shape[0]} forecast climate months")
    fit = cf.fits[method] if fit is None else fit
    rows = _future_crossbasis_rows(cf, path[:h])
    rr_prev = float(cf.risk.rr[-1])
    last = cf.months[-1]
    out = np.empty(h)
    for s in range(h):
        x = design_row(cf.design, rr_prev, [r[s] for r in rows], (last + (s + 1)).month)
        value = max(float(predict_method(method, fit, x, cf.spec)[0]), 0.0)
        if future_resid is not None:
            value = max(value + float(future_resid[s]), 0.0)
        out[s] = value
        rr_prev = value
    return out


def circular_block_indices(n: int, length: int, block: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``length`` draws made of contiguous, wrapping blocks of ``n`` items."""
    n_blocks = -(-length // block)
    starts = rng.integers(0, n, n_blocks)
    idx = (starts[:, None] + np.arange(block)[None, :]) % n
    return idx.ravel()[:length]


def block_bootstrap_paths(fitted: np.ndarray, resid: np.ndarray, refit_forecast: Callable,
                          n_boot: int, block: int, h: int, seeds: Sequence) -> tuple[np.ndarray, int]:
    """Bootstrap forecast paths.

    Each replicate draws ``n + h`` residuals in circular blocks, forms the
    pseudo-response ``max(0, fitted + e[:n])`` and calls
    ``refit_forecast(b, y_star, e[n:])`` for replicate ``b``'s path. Failed refits are skipped;
    the count is returned alongside the ``(replicates, h)`` array.
    """
    n = len(resid)
    if n < 2 * block:
        raise TooFewResiduals(f"{n} residuals cannot hold two blocks of {block}")
    paths, failed = [], 0
    for b in range(n_boot):
        rng = np.random.default_rng(seeds[b])
        e = resid[circular_block_indices(n, n + h, block, rng)]
        y_star = np.maximum(fitted + e[:n], 0.0)
        try:
            paths.append(refit_forecast(b, y_star, e[n:]))
        except LagcastError:
            failed += 1
    if not paths:
        raise TooFewResiduals("every bootstrap replicate failed to refit")
    return np.array(paths).reshape(-1, h), failed


def interval_from_paths(paths: np.ndarray, alpha: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Per-step empirical quantiles (type 7, linear interpolation)."""
    tail = (1 - alpha) / 2
    lo, hi = np.quantile(paths, [tail, 1 - tail], axis=0, method="linear")
    return lo, hi


def bootstrap_intervals(cf: CantonFit, climate: VarForecast | np.ndarray, method: str,
                        n_boot: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Lower/upper bounds from ``n_boot`` refit-and-forecast replicates.

    Returns ``(lower, upper, paths, n_failed)``.
    """
    spec = cf.spec
    n_boot = spec.n_boot if n_boot is None else n_boot
    fitted = cf.fitted[method]
    resid = cf.y - fitted
    seeds = [derive_seed(spec.seed, cf.canton_id, method, "resample", str(b)) for b in range(n_boot)]

    def refit_forecast(b, y_star, future):
        model = fit_method(method, cf.design, y_star, spec,
                           derive_seed(spec.seed, cf.canton_id, method, "replicate", str(b)))
        return forecast_recursive(cf, climate, method, fit=model, future_resid=future)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        paths, failed = block_bootstrap_paths(fitted, resid, refit_forecast, n_boot, spec.block,
                                              spec.horizon, seeds)
    lo, hi = interval_from_paths(paths, spec.alpha)
    return lo, hi, paths, failed


@dataclass(frozen=True)
class ForecastResult:
    canton_id: str
    method: str
    months: tuple[MonthIndex, ...]
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_boot: int = 0
    n_failed: int = 0

    def __post_init__(self):
        point = np.asarray(self.point, dtype=float)
        lower = np.minimum(np.asarray(self.lower, dtype=float), point)
        upper = np.maximum(np.asarray(self.upper, dtype=float), point)
        if np.any(lower < 0):
            raise ValidationError("forecast bounds must be non-negative")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "months", tuple(self.months))


def forecast_months(cf: CantonFit) -> tuple[MonthIndex, ...]:
    return tuple(cf.months[-1] + s for s in range(1, cf.spec.horizon + 1))


def forecast_canton(cf: CantonFit, climate: VarForecast, method: str) -> ForecastResult:
    point = forecast_recursive(cf, climate, method)
    if cf.spec.n_boot > 0:
        lo, hi, _, failed = bootstrap_intervals(cf, climate, method)
    else:
        lo, hi, failed = point, point, 0
    return ForecastResult(cf.canton_id, method, forecast_months(cf), point, lo, hi, cf.spec.n_boot, failed)


def persistence_forecast(cf: CantonFit) -> ForecastResult:
    """Last observed risk carried forward, with intervals from empirical ``s``-step changes."""
    rr = np.asarray(cf.risk.rr)
    last = float(rr[-1])
    tail = (1 - cf.spec.alpha) / 2
    h = cf.spec.horizon
    lo, hi = np.empty(h), np.empty(h)
    for s in range(1, h + 1):
        diffs = rr[s:] - rr[:-s]
        q = np.quantile(diffs, [tail, 1 - tail], method="linear")
        lo[s - 1], hi[s - 1] = max(last + q[0], 0.0), max(last + q[1], 0.0)
    return ForecastResult(cf.canton_id, "persistence", forecast_months(cf), np.full(h, last), lo, hi)


@dataclass
class CantonResult:
    fit: CantonFit
    var_model: VarModel
    climate: VarForecast
    forecasts: dict[str, ForecastResult]


def run_canton(panel: MonthlyPanel, canton_id: str, spec: CantonSpec,
               fits: Mapping[str, ZagaFit | ForestModel] | None = None) -> CantonResult:
    cf = fit_canton(panel, canton_id, spec, fits)
    model, transform = fit_climate_var(cf)
    climate = forecast_climate(cf, model, transform)
    forecasts = {m: forecast_canton(cf, climate, m) for m in spec.methods}
    return CantonResult(cf, model, climate, forecasts)


def _run_one(args):
    panel, canton_id, spec, fits = args
    return run_canton(panel, canton_id, spec, fits)


def thread_count() -> int:
    raw = os.environ.get("LAGCAST_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"LAGCAST_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValidationError("LAGCAST_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def run_panel(panel: MonthlyPanel, spec: CantonSpec, cantons: Sequence[str] | None = None,
              fits: Mapping[str, Mapping] | None = None, workers: int | None = None) -> list[CantonResult]:
    """Run every canton; results come back in canton order whatever the worker count."""
    cantons = list(cantons) if cantons is not None else panel.canton_ids
    # the truncated panel is all a worker ever sees
    train = _train_panel(panel, spec)
    jobs = [(train, c, spec, (fits or {}).get(c)) for c in cantons]
    workers = thread_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run_one, jobs))


def observed_risk(panel: MonthlyPanel, canton_id: str, months: Sequence[MonthIndex]) -> np.ndarray:
    """Observed relative risk over ``months`` (used only for scoring)."""
    if not months:
        raise MissingObservations("no months requested")
    try:
        sub = panel.window(months[0], months[-1])
    except ValidationError:
        raise MissingObservations(
            f"observations for {canton_id} over {months[0]}..{months[-1]} are not in the panel") from None
    return np.asarray(compute_relative_risk(sub, canton_id).rr)


@dataclass(frozen=True)
class ReportRow:
    canton_id: str
    best_model: str
    scores: Mapping[str, MethodScore]

    @property
    def best(self) -> MethodScore:
        return self.scores[self.best_model]


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ReportRow, ...]
    methods: tuple[str, ...]


def evaluate(results: Sequence[ForecastResult], observed: Mapping[str, np.ndarray],
             alpha: float = 0.95) -> ComparisonReport:
    """Score every forecast against the observed test risk and pick a best method per canton."""
    by_canton: dict[str, dict[str, ForecastResult]] = {}
    for r in results:
        by_canton.setdefault(r.canton_id, {})[r.method] = r
    rows, methods = [], set()
    for canton in sorted(by_canton):
        obs = observed.get(canton)
        per_method = {}
        for method, r in sorted(by_canton[canton].items()):
            if obs is None or len(obs) < len(r.point) or not np.all(np.isfinite(obs[:len(r.point)])):
                raise MissingObservations(f"observed test risk missing for canton {canton!r}")
            per_method[method] = ScoredForecast(np.asarray(obs[:len(r.point)], dtype=float),
                                                r.point, r.lower, r.upper, alpha)
            methods.add(method)
        scores = {m: MethodScore(m, nrmse(s), nis(s)) for m, s in per_method.items()}
        rows.append(ReportRow(canton, best_model(per_method), scores))
    return ComparisonReport(tuple(rows), tuple(sorted(methods)))
