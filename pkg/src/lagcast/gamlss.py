"""Zero-adjusted gamma regression with covariates on the location only.

The model is

    y ~ ZAGA(mu, sigma, nu),  log mu = X beta,  log sigma = b2,  logit nu = b3.

Because ``sigma`` and ``nu`` carry no covariates the likelihood factorizes:
the zero indicator is Bernoulli(nu), whose MLE is the zero proportion, and
``(beta, sigma)`` maximize a log-link gamma likelihood over the positive
responses. The latter is solved by Newton-Raphson on ``beta`` with step
halving, updating the gamma shape by a one-dimensional Newton solve of the
profile likelihood after every step.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .basis import CrossBasis
from .errors import (
    AllZeroResponse,
    ColumnMismatch,
    MisalignedInputs,
    NoZeroObservationsWarning,
    NonConvergence,
    RankDeficient,
    ValidationError,
)
from .panel import MonthIndex, RiskSeries
from .zadist import ZagaParams, zaga_ppf

MAX_SHAPE = 1e12


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    months: tuple[MonthIndex, ...] = ()
    rows: np.ndarray | None = None  # positions of the rows in the source series
    reference_month: int = 1
    crossbases: tuple[CrossBasis, ...] = ()
    cb_keep: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != len(self.columns):
            raise ValidationError("design values must be n x len(columns)")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("design values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "columns", tuple(self.columns))

    @classmethod
    def from_array(cls, X, columns: Sequence[str] | None = None) -> "DesignMatrix":
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        cols = tuple(columns) if columns is not None else tuple(f"x{i}" for i in range(X.shape[1]))
        return cls(X, cols)

    @property
    def shape(self):
        return self.values.shape


def _as_design(design) -> DesignMatrix:
    return design if isinstance(design, DesignMatrix) else DesignMatrix.from_array(design)


def month_dummies(month_numbers, reference: int = 1) -> tuple[np.ndarray, tuple[str, ...]]:
    """Treatment coding of month-of-year with one reference month omitted."""
    others = [m for m in range(1, 13) if m != reference]
    month_numbers = np.asarray(month_numbers)
    D = (month_numbers[:, None] == np.array(others)[None, :]).astype(float)
    return D, tuple(f"month_{m}" for m in others)


def dependent_columns(X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Indices of columns lying (numerically) in the span of the columns before them."""
    norms = np.linalg.norm(X, axis=0)
    Xn = X / np.where(norms > 0, norms, 1.0)
    R = np.linalg.qr(Xn, mode="r")
    d = np.abs(np.diag(R))
    return np.flatnonzero((norms == 0) | (d < tol))


def check_rank(X: np.ndarray, columns: Sequence[str]):
    dep = dependent_columns(X)
    if X.shape[0] < X.shape[1] or dep.size:
        bad = [columns[i] for i in dep] or ["(more columns than rows)"]
        raise RankDeficient(bad)


def _kept_columns(cb: CrossBasis, drop_var_intercept: bool) -> np.ndarray:
    idx = np.arange(cb.v * cb.l)
    if drop_var_intercept and cb.var_spec.kind == "bspline":
        # B-spline rows sum to one: the first function's columns duplicate the intercept
        idx = idx[cb.l:]
    return idx


def assemble_design(
    risk: RiskSeries,
    crossbases: Sequence[CrossBasis],
    months: Sequence[MonthIndex] | None = None,
    reference_month: int = 1,
    drop_var_intercept: bool = True,
    check: bool = True,
) -> tuple[DesignMatrix, np.ndarray]:
    """Design ``[1, RR_{t-1}, cross-basis rows, month dummies]`` and response ``RR_t``.

    Rows lacking a full lag history, plus one more for the autoregressive
    term, are dropped: usable rows start at ``max(valid_from) + 1``.
    """
    T = len(risk.months)
    if months is not None and tuple(months) != tuple(risk.months):
        raise MisalignedInputs("months do not match the risk series")
    for cb in crossbases:
        if cb.matrix.shape[0] != T:
            raise MisalignedInputs(f"cross-basis {cb.name!r} has {cb.matrix.shape[0]} rows, expected {T}")
    start = max([cb.valid_from for cb in crossbases], default=0) + 1
    if start >= T:
        raise ValidationError("series too short for the lag structure")
    rows = np.arange(start, T)
    rr = np.asarray(risk.rr)
    blocks = [np.ones((len(rows), 1)), rr[rows - 1, None]]
    columns = ["intercept", "rr_lag1"]
    keeps = []
    for cb in crossbases:
        keep = _kept_columns(cb, drop_var_intercept)
        keeps.append(keep)
        blocks.append(cb.matrix[rows][:, keep])
        columns.extend(cb.columns[i] for i in keep)
    D, dcols = month_dummies([risk.months[r].month for r in rows], reference_month)
    blocks.append(D)
    columns.extend(dcols)
    X = np.hstack(blocks)
    if check:
        check_rank(X, columns)
    design = DesignMatrix(X, tuple(columns), tuple(risk.months[r] for r in rows), rows,
                          reference_month, tuple(crossbases), tuple(keeps))
    return design, rr[rows].copy()


def design_row(layout: DesignMatrix, rr_prev: float, cb_rows: Sequence[np.ndarray], month: int) -> np.ndarray:
    """One design row in ``layout``'s column order, from full cross-basis rows."""
    if len(cb_rows) != len(layout.cb_keep):
        raise MisalignedInputs("one cross-basis row is needed per cross-basis in the layout")
    parts = [np.array([1.0, rr_prev])]
    parts += [np.asarray(r, dtype=float)[keep] for r, keep in zip(cb_rows, layout.cb_keep)]
    parts.append(month_dummies([month], layout.reference_month)[0][0])
    row = np.concatenate(parts)
    if row.size != len(layout.columns):
        raise ColumnMismatch("assembled row width does not match the layout")
    return row


@dataclass
class ZagaFit:
    columns: tuple[str, ...]
    beta_mu: np.ndarray
    sigma_hat: float
    nu_hat: float
    loglik: float
    n_obs: int
    n_zero: int
    cov_beta: np.ndarray | None = None
    n_iter: int = 0
    trace: list[float] = field(default_factory=list)

    @property
    def n_params(self) -> int:
        return len(self.beta_mu) + 2

    @property
    def standard_errors(self) -> np.ndarray:
        if self.cov_beta is None:
            raise ValidationError("covariance not available for this fit")
        return np.sqrt(np.diag(self.cov_beta))

    def to_text(self) -> str:
        lines = ["# zaga-fit v1",
                 f"sigma_hat {self.sigma_hat:.17g}",
                 f"nu_hat {self.nu_hat:.17g}",
                 f"loglik {self.loglik:.17g}",
                 f"n_obs {self.n_obs}",
                 f"n_zero {self.n_zero}"]
        lines += [f"beta {name} {b:.17g}" for name, b in zip(self.columns, self.beta_mu)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ZagaFit":
        scalars, names, betas = {}, [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "beta" and len(parts) == 3:
                names.append(parts[1])
                betas.append(float(parts[2]))
            elif len(parts) == 2:
                scalars[parts[0]] = parts[1]
            else:
                raise ValidationError(f"malformed fit record at line {lineno}: {line!r}")
        try:
            return cls(tuple(names), np.array(betas), float(scalars["sigma_hat"]),
                       float(scalars["nu_hat"]), float(scalars["loglik"]),
                       int(scalars["n_obs"]), int(scalars["n_zero"]))
        except KeyError as exc:
            raise ValidationError(f"fit record lacks {exc.args[0]!r}") from None


def gamma_loglik(X, y, beta, shape) -> float:
    """Log-likelihood of positive ``y`` under the log-link gamma with shape ``1/sigma^2``."""
    eta = X @ beta
    r = y * np.exp(-eta)
    k = shape
    return float(np.sum(k * np.log(k) - k * eta + (k - 1) * np.log(y) - k * r) - len(y) * special.gammaln(k))


def zaga_loglik(X, y, beta, sigma, nu) -> float:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    pos = y > 0
    n0 = int(np.count_nonzero(~pos))
    ll = gamma_loglik(X[pos], y[pos], beta, 1.0 / sigma ** 2)
    ll += (n0 * np.log(nu) if n0 else 0.0) + (len(y) - n0) * np.log1p(-nu)
    return float(ll)


def zaga_score(X, y, beta, sigma, nu) -> np.ndarray:
    """Gradient of :func:`zaga_loglik` w.r.t. ``(beta, log sigma, logit nu)``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    pos = y > 0
    Xp, yp = X[pos], y[pos]
    k = 1.0 / sigma ** 2
    r = yp * np.exp(-(Xp @ beta))
    g_beta = k * Xp.T @ (r - 1)
    d_shape = len(yp) * (np.log(k) + 1 - special.digamma(k)) + np.sum(np.log(r) - r)
    g_logsigma = -2 * k * d_shape
    n0 = len(y) - len(yp)
    g_logitnu = n0 * (1 - nu) - len(yp) * nu
    return np.concatenate([g_beta, [g_logsigma, g_logitnu]])


def _profile_shape(r: np.ndarray) -> float:
    """Gamma shape maximizing the likelihood given ratios ``r = y / mu``.

    Solves ``log k - digamma(k) = mean(r - log r) - 1`` by Newton steps on ``log k``.
    """
    D = float(np.mean(r - np.log(r))) - 1.0
    if D <= 1.0 / (2 * MAX_SHAPE):
        return MAX_SHAPE
    k = (3 - D + np.sqrt((D - 3) ** 2 + 24 * D)) / (12 * D)
    u = np.log(k)
    for _ in range(50):
        k = np.exp(u)
        f = np.log(k) - special.digamma(k) - D
        fp = 1 - k * special.polygamma(1, k)
        step = f / fp
        u -= step
        if abs(step) < 1e-14:
            break
    return float(min(np.exp(u), MAX_SHAPE))


def fit_zaga(design, y, max_iter: int = 200, tol: float = 1e-9) -> ZagaFit:
    design = _as_design(design)
    X = design.values
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise MisalignedInputs(f"response has shape {y.shape}, design has {n} rows")
    if not np.all(np.isfinite(y)) or np.any(y < 0):
        raise ValidationError("response must be finite and non-negative")
    pos = y > 0
    n_pos = int(np.count_nonzero(pos))
    if n_pos == 0:
        raise AllZeroResponse("every response value is zero")
    n_zero = n - n_pos
    if n_zero == 0:
        nu = 1.0 / (2 * n)
        warnings.warn(f"no zero responses; nu_hat pinned to 1/(2n) = {nu:.3g}",
                      NoZeroObservationsWarning, stacklevel=2)
    else:
        nu = n_zero / n
    Xp, yp = X[pos], y[pos]
    if n_pos <= p:
        raise ValidationError(f"{n_pos} positive responses for {p} coefficients")
    check_rank(Xp, design.columns)

    eps = 0.5 * yp.min()
    beta = np.linalg.lstsq(X, np.log(y + eps), rcond=None)[0]
    r = yp * np.exp(-(Xp @ beta))
    k = 1.0 / max(float(np.mean((r - 1) ** 2)), 1e-12)
    ll = gamma_loglik(Xp, yp, beta, k)
    trace = [ll]
    converged = polish = False
    grad_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        r = yp * np.exp(-(Xp @ beta))
        grad = Xp.T @ (r - 1)  # score / k
        grad_norm = float(np.linalg.norm(k * grad))
        info = (Xp * r[:, None]).T @ Xp  # observed information / k
        step = np.linalg.solve(info, grad)
        t = 1.0
        while True:
            cand = beta + t * step
            ll_new = gamma_loglik(Xp, yp, cand, k)
            if np.isfinite(ll_new) and ll_new >= ll:
                beta = cand
                break
            t *= 0.5
            if t < 1e-10:
                ll_new = ll
                break
        k = _profile_shape(yp * np.exp(-(Xp @ beta)))
        ll_new = gamma_loglik(Xp, yp, beta, k)
        change = abs(ll_new - ll)
        ll = max(ll, ll_new)
        trace.append(ll)
        if polish:
            converged = True
            break
        if change <= tol * max(abs(ll), 1.0):
            polish = True  # one more Newton step puts the estimate at machine precision
    if not converged:
        raise NonConvergence(it, grad_norm)

    cov = np.linalg.inv(k * (Xp.T @ Xp))
    sigma = 1.0 / np.sqrt(k)
    loglik = zaga_loglik(X, y, beta, sigma, nu)
    binary = (n_zero * np.log(nu) if n_zero else 0.0) + n_pos * np.log1p(-nu)
    return ZagaFit(design.columns, beta, float(sigma), float(nu), loglik, n, n_zero,
                   cov, it, [v + binary for v in trace])


def predict_response(fit: ZagaFit, new_design, point: str = "mean") -> tuple[np.ndarray, np.ndarray]:
    """Location ``mu = exp(x beta)`` and the point forecast per row.

    ``point`` selects the functional: ``"mean"`` (mixture mean ``(1 - nu) mu``,
    the default), ``"mu"`` or ``"median"``.
    """
    if isinstance(new_design, DesignMatrix):
        if new_design.columns != tuple(fit.columns):
            raise ColumnMismatch("design columns differ from the fitted columns")
        X = new_design.values
    else:
        X = np.atleast_2d(np.asarray(new_design, dtype=float))
        if X.shape[1] != len(fit.beta_mu):
            raise ColumnMismatch(f"design has {X.shape[1]} columns, fit has {len(fit.beta_mu)}")
    mu = np.exp(X @ fit.beta_mu)
    if point == "mean":
        value = (1 - fit.nu_hat) * mu
    elif point == "mu":
        value = mu
    elif point == "median":
        value = np.asarray(zaga_ppf(0.5, ZagaParams(mu, fit.sigma_hat, fit.nu_hat)), dtype=float)
    else:
        raise ValidationError(f"unknown point functional {point!r}")
    return mu, value


def aic(fit: ZagaFit) -> float:
    return -2.0 * fit.loglik + 2.0 * fit.n_params
