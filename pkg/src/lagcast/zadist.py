"""Zero-adjusted gamma (ZAGA) and inverse Gaussian (ZAIG) distributions.

Both put mass ``nu`` at zero and spread ``1 - nu`` over a continuous positive
part ``W`` parametrized by its mean ``mu`` and a scale ``sigma``:

* gamma:  E(W) = mu, V(W) = sigma^2 mu^2  (shape 1/sigma^2, scale sigma^2 mu)
* inverse Gaussian: E(W) = mu, V(W) = sigma^2 mu^3

All functions broadcast over numpy arrays. ``nu`` equal to 0 or 1 is accepted
for evaluation; only fitting requires it to be interior.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import NegativeY, ValidationError


@dataclass(frozen=True)
class ZagaParams:
    mu: float | np.ndarray
    sigma: float | np.ndarray
    nu: float | np.ndarray

    def __post_init__(self):
        mu, sigma, nu = (np.asarray(v, dtype=float) for v in (self.mu, self.sigma, self.nu))
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma)) and np.all(np.isfinite(nu))):
            raise ValidationError("parameters must be finite")
        if np.any(mu <= 0) or np.any(sigma <= 0):
            raise ValidationError("mu and sigma must be positive")
        if np.any(nu < 0) or np.any(nu > 1):
            raise ValidationError("nu must lie in [0, 1]")

    @property
    def shape(self):
        return 1.0 / np.asarray(self.sigma, dtype=float) ** 2

    @property
    def scale(self):
        return np.asarray(self.sigma, dtype=float) ** 2 * np.asarray(self.mu, dtype=float)


class ZaigParams(ZagaParams):
    pass


def _check_y(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise NegativeY("y must be non-negative")
    return y


def _mix(y, nu, log_cont):
    """Combine point mass and continuous log-density into a log-density."""
    nu = np.asarray(nu, dtype=float)
    y, nu, log_cont = np.broadcast_arrays(y, nu, log_cont)
    with np.errstate(divide="ignore"):
        at_zero = np.log(nu)
        positive = np.log1p(-nu) + log_cont
    return np.where(y == 0, at_zero, positive)


def gamma_logpdf(y, mu, sigma):
    """Log-density of the mean-parametrized gamma, evaluated via ``gammaln``."""
    y = np.asarray(y, dtype=float)
    k = 1.0 / np.asarray(sigma, dtype=float) ** 2
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = k * np.log(k / mu) + (k - 1) * np.log(y) - k * y / mu - special.gammaln(k)
    return np.where(y > 0, out, -np.inf)


def zaga_logpdf(y, p: ZagaParams):
    y = _check_y(y)
    safe = np.where(y > 0, y, 1.0)
    return _mix(y, p.nu, gamma_logpdf(safe, p.mu, p.sigma))


def zaga_pdf(y, p: ZagaParams):
    """Mixed density: ``nu`` at zero, ``(1 - nu) * gamma pdf`` above."""
    out = np.exp(zaga_logpdf(y, p))
    return out if out.ndim else float(out)


def zaga_cdf(y, p: ZagaParams):
    y = _check_y(y)
    nu = np.asarray(p.nu, dtype=float)
    out = nu + (1 - nu) * special.gammainc(p.shape, y / p.scale)
    return out if np.ndim(out) else float(out)


def zaga_ppf(q, p: ZagaParams):
    """Quantile function; returns 0 wherever ``q <= nu``."""
    q = np.asarray(q, dtype=float)
    nu = np.asarray(p.nu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.clip((q - nu) / (1 - nu), 0.0, 1.0)
        cont = special.gammaincinv(p.shape, r) * p.scale
    out = np.where(q <= nu, 0.0, cont)
    return out if out.ndim else float(out)


def zaga_sample(p: ZagaParams, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` values; ``seed`` may be an int, SeedSequence or Generator.

    ``mu`` may be a length-``n`` array (one draw per mean, as in regression).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    w = rng.gamma(np.broadcast_to(p.shape, (n,)), np.broadcast_to(p.scale, (n,)))
    return np.where(u < np.asarray(p.nu), 0.0, w)


def zaga_moments(p: ZagaParams) -> tuple[float, float]:
    mu, sigma, nu = (np.asarray(v, dtype=float) for v in (p.mu, p.sigma, p.nu))
    mean = (1 - nu) * mu
    var = (1 - nu) * mu ** 2 * (sigma ** 2 + nu)
    if mean.ndim == 0:
        return float(mean), float(var)
    return mean, var


def ig_logpdf(y, mu, sigma):
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    s2 = np.asarray(sigma, dtype=float) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -0.5 * np.log(2 * np.pi * s2 * y ** 3) - (y - mu) ** 2 / (2 * mu ** 2 * s2 * y)
    return np.where(y > 0, out, -np.inf)


def zaig_logpdf(y, p: ZaigParams):
    y = _check_y(y)
    safe = np.where(y > 0, y, 1.0)
    return _mix(y, p.nu, ig_logpdf(safe, p.mu, p.sigma))


def zaig_pdf(y, p: ZaigParams):
    out = np.exp(zaig_logpdf(y, p))
    return out if out.ndim else float(out)


def zaig_cdf(y, p: ZaigParams):
    # inverse Gaussian CDF with shape lambda = 1 / sigma^2
    y = _check_y(y)
    mu = np.asarray(p.mu, dtype=float)
    lam = 1.0 / np.asarray(p.sigma, dtype=float) ** 2
    nu = np.asarray(p.nu, dtype=float)
    safe = np.where(y > 0, y, 1.0)
    r = np.sqrt(lam / safe)
    # exp(2 lam / mu) * Phi(-r (y/mu + 1)) computed in log space to avoid overflow
    log_second = 2 * lam / mu + special.log_ndtr(-r * (safe / mu + 1))
    cont = special.ndtr(r * (safe / mu - 1)) + np.exp(log_second)
    out = np.where(y > 0, nu + (1 - nu) * cont, nu)
    return out if out.ndim else float(out)


def zaig_sample(p: ZaigParams, n: int, seed=None) -> np.ndarray:
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    lam = 1.0 / np.asarray(p.sigma, dtype=float) ** 2
    w = rng.wald(np.broadcast_to(p.mu, (n,)), np.broadcast_to(lam, (n,)))
    return np.where(u < np.asarray(p.nu), 0.0, w)


def zaig_moments(p: ZaigParams) -> tuple[float, float]:
    mu, s2, nu = float(p.mu), float(p.sigma) ** 2, float(p.nu)
    ew2 = s2 * mu ** 3 + mu ** 2
    mean = (1 - nu) * mu
    return mean, (1 - nu) * ew2 - mean ** 2
