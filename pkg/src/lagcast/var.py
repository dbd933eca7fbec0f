"""VAR(p) with linear trend and monthly dummies: OLS fit, BIC order, forecasts."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import HorizonZero, InsufficientData, SingularRegressors, UnstableModelWarning, ValidationError

Z95 = 1.959964
DEP_TOL = 1e-9


@dataclass(frozen=True)
class VarModel:
    p: int
    coefs: np.ndarray  # (p, k, k); coefs[i] multiplies y_{t-i-1}
    intercept: np.ndarray  # (k,)
    trend: np.ndarray  # (k,), zero when not included
    seasonal: np.ndarray  # (k, 11), zero when not included
    sigma: np.ndarray  # (k, k)
    trend_included: bool = True
    seasonal_included: bool = True
    n_obs: int = 0
    reference_month: int = 1
    dropped: tuple[str, ...] = ()
    names: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return self.coefs.shape[1]

    def companion(self) -> np.ndarray:
        k, p = self.k, self.p
        top = np.hstack(list(self.coefs))
        if p == 1:
            return top
        return np.vstack([top, np.hstack([np.eye(k * (p - 1)), np.zeros((k * (p - 1), k))])])

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.companion()))))

    def deterministic(self, t: int, month: int) -> np.ndarray:
        out = self.intercept + self.trend * t
        if month != self.reference_month:
            out = out + self.seasonal[:, _season_col(month, self.reference_month)]
        return out


def _season_col(month: int, reference: int) -> int:
    return month - 1 - (month > reference)


def _month_numbers(months, T):
    if months is None:
        return None
    m = np.array([getattr(v, "month", v) for v in months], dtype=int)
    if m.shape != (T,):
        raise ValidationError(f"need one month per row ({T}), got {m.shape}")
    return m


def _regressors(series, p, first_row, t_index, months, trend, seasonal, reference=1):
    T, k = series.shape
    rows = np.arange(first_row, T)
    blocks = [np.ones((len(rows), 1))]
    names = ["const"]
    if trend:
        blocks.append(t_index[rows, None].astype(float))
        names.append("trend")
    if seasonal:
        others = [m for m in range(1, 13) if m != reference]
        blocks.append((months[rows, None] == np.array(others)[None, :]).astype(float))
        names += [f"month_{m}" for m in others]
    n_det = len(names)
    for lag in range(1, p + 1):
        blocks.append(series[rows - lag])
        names += [f"L{lag}.y{j}" for j in range(k)]
    return np.hstack(blocks), series[rows], names, n_det


def _fit(series, p, first_row, t_index, months, trend, seasonal):
    T, k = series.shape
    Z, Y, names, n_det = _regressors(series, p, first_row, t_index, months, trend, seasonal)
    if Z.shape[0] <= Z.shape[1]:
        raise InsufficientData(f"{Z.shape[0]} rows for {Z.shape[1]} regressors per equation")
    norms = np.linalg.norm(Z, axis=0)
    R = np.linalg.qr(Z / np.where(norms > 0, norms, 1.0), mode="r")
    dep = (norms == 0) | (np.abs(np.diag(R)) < DEP_TOL)
    if dep[:n_det].any():
        bad = [n for n, d in zip(names[:n_det], dep[:n_det]) if d]
        raise SingularRegressors("deterministic regressors are collinear: " + ", ".join(bad))
    # lag columns already spanned by the deterministic terms (noiseless data) get a zero coefficient
    keep = ~dep
    B = np.zeros((Z.shape[1], k))
    B[keep] = np.linalg.lstsq(Z[:, keep], Y, rcond=None)[0]
    resid = Y - Z @ B
    return B, resid, names, n_det, tuple(n for n, d in zip(names, dep) if d)


def _unpack(B, n_det, k, p, trend, seasonal):
    pos = 0
    intercept = B[pos]
    pos += 1
    tr = np.zeros(k)
    if trend:
        tr = B[pos]
        pos += 1
    seas = np.zeros((k, 11))
    if seasonal:
        seas = B[pos:pos + 11].T
        pos += 11
    coefs = np.stack([B[n_det + i * k: n_det + (i + 1) * k].T for i in range(p)])
    return intercept, tr, seas, coefs


def fit_var(series, p: int, months=None, trend: bool = True, seasonal: bool = True,
            t_index=None, first_row: int | None = None) -> VarModel:
    """Equation-by-equation OLS on ``[1, t, month dummies, y_{t-1}, ..., y_{t-p}]``.

    ``t_index`` is the trend counter per row (default ``1..T``); ``months`` gives
    each row's month of year and is required when ``seasonal``. Rows before
    ``first_row`` (default ``p``) only serve as lags. The residual covariance
    divides by the number of regression rows.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T, k = series.shape
    if p < 1:
        raise ValidationError("lag order must be >= 1")
    first_row = p if first_row is None else first_row
    if first_row < p:
        raise ValidationError("first_row must be >= p")
    if T <= k * p + 13 or T - first_row < 1:
        raise InsufficientData(f"T={T} too short for a {k}-variable VAR({p})")
    t_index = np.arange(1, T + 1) if t_index is None else np.asarray(t_index)
    months = _month_numbers(months, T)
    if seasonal and months is None:
        raise ValidationError("seasonal terms need the month of each row")
    B, resid, names, n_det, dropped = _fit(series, p, first_row, t_index, months, trend, seasonal)
    intercept, tr, seas, coefs = _unpack(B, n_det, k, p, trend, seasonal)
    n = resid.shape[0]
    sigma = resid.T @ resid / n
    sigma = 0.5 * (sigma + sigma.T)
    return VarModel(p, coefs, intercept, tr, seas, sigma, trend, seasonal, n, 1, dropped, tuple(names))


def var_residuals(model: VarModel, series, months=None, t_index=None) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    T = len(series)
    t_index = np.arange(1, T + 1) if t_index is None else np.asarray(t_index)
    months = _month_numbers(months, T) if months is not None else np.ones(T, dtype=int)
    out = []
    for t in range(model.p, T):
        pred = model.deterministic(int(t_index[t]), int(months[t]))
        for i in range(model.p):
            pred = pred + model.coefs[i] @ series[t - i - 1]
        out.append(series[t] - pred)
    return np.array(out)


def bic_table(series, p_max: int = 13, months=None, trend: bool = True, seasonal: bool = True) -> dict[int, float]:
    """BIC per candidate order on the common sample ``t >= p_max``.

    ``BIC(p) = ln det Sigma_p + (ln T_eff / T_eff) * (regressors per equation * k)``
    with ``Sigma_p`` the residual covariance over the ``T_eff`` common rows.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T, k = series.shape
    if p_max < 1:
        raise ValidationError("p_max must be >= 1")
    n_det = 1 + int(trend) + 11 * int(seasonal)
    while p_max > 1 and T - p_max <= n_det + k * p_max:
        p_max -= 1
    t_index = np.arange(1, T + 1)
    months = _month_numbers(months, T)
    if seasonal and months is None:
        raise ValidationError("seasonal terms need the month of each row")
    table = {}
    for p in range(1, p_max + 1):
        _, resid, names, _, _ = _fit(series, p, p_max, t_index, months, trend, seasonal)
        n = resid.shape[0]
        sign, logdet = np.linalg.slogdet(resid.T @ resid / n)
        logdet = logdet if sign > 0 else -np.inf
        table[p] = float(logdet + np.log(n) / n * len(names) * k)
    return table


def select_lag_bic(series, p_max: int = 13, months=None, trend: bool = True, seasonal: bool = True) -> int:
    table = bic_table(series, p_max, months, trend, seasonal)
    best = min(table.values())
    return min(p for p, v in table.items() if v == best)


@dataclass(frozen=True)
class VarForecast:
    mean: np.ndarray  # (h, k)
    cov: np.ndarray  # (h, k, k)
    lower: np.ndarray
    upper: np.ndarray

    @property
    def horizon(self) -> int:
        return self.mean.shape[0]


def psi_weights(model: VarModel, h: int) -> list[np.ndarray]:
    k = model.k
    psi = [np.eye(k)]
    for j in range(1, h):
        acc = np.zeros((k, k))
        for i in range(1, min(j, model.p) + 1):
            acc += model.coefs[i - 1] @ psi[j - i]
        psi.append(acc)
    return psi


def forecast_var(model: VarModel, last_obs, h: int, t_last: int, month_last: int) -> VarForecast:
    """Recursive mean forecast with Gaussian 95% bounds.

    ``last_obs`` holds at least the final ``p`` observations (oldest first);
    ``t_last`` and ``month_last`` are the trend counter and month of year of
    the final one, so deterministic terms continue seamlessly.
    """
    if h < 1:
        raise HorizonZero("forecast horizon must be >= 1")
    last_obs = np.asarray(last_obs, dtype=float)
    if last_obs.ndim == 1:
        last_obs = last_obs[:, None]
    if last_obs.shape[0] < model.p or last_obs.shape[1] != model.k:
        raise ValidationError(f"need the last {model.p} observations of {model.k} series")
    if model.spectral_radius() >= 1:
        warnings.warn("fitted VAR is not stable (companion eigenvalue modulus >= 1)",
                      UnstableModelWarning, stacklevel=2)
    hist = list(last_obs[-model.p:])
    means = []
    for s in range(1, h + 1):
        month = (month_last - 1 + s) % 12 + 1
        y = model.deterministic(t_last + s, month)
        for i in range(model.p):
            y = y + model.coefs[i] @ hist[-1 - i]
        hist.append(y)
        means.append(y)
    mean = np.array(means)
    psi = psi_weights(model, h)
    cov = np.empty((h, model.k, model.k))
    acc = np.zeros((model.k, model.k))
    for s in range(h):
        acc = acc + psi[s] @ model.sigma @ psi[s].T
        cov[s] = 0.5 * (acc + acc.T)
    half = Z95 * np.sqrt(np.clip(np.diagonal(cov, axis1=1, axis2=2), 0, None))
    return VarForecast(mean, cov, mean - half, mean + half)
