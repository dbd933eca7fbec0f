"""Forecast scores: normalized RMSE and the normalized interval score."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InvalidAlpha, MisalignedScores, ValidationError, ZeroMeanRisk


@dataclass(frozen=True)
class ScoredForecast:
    observed: np.ndarray
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float = 0.95

    def __post_init__(self):
        arrs = [np.atleast_1d(np.asarray(a, dtype=float)) for a in
                (self.observed, self.point, self.lower, self.upper)]
        m = len(arrs[0])
        if m < 1 or any(a.shape != (m,) for a in arrs):
            raise ValidationError("observed, point, lower and upper must be equal-length vectors")
        if np.any(arrs[2] > arrs[3]):
            raise ValidationError("interval lower bound exceeds upper bound")
        for name, a in zip(("observed", "point", "lower", "upper"), arrs):
            object.__setattr__(self, name, a)

    @property
    def m(self) -> int:
        return len(self.observed)

    def mean_risk(self) -> float:
        rbar = float(np.mean(self.observed))
        if rbar <= 0:
            raise ZeroMeanRisk("mean observed relative risk is zero; normalization undefined")
        return rbar


def nrmse(scored: ScoredForecast, conventional: bool = False) -> float:
    """``sqrt(sum((RR - RRhat)^2) / (m * RRbar))``.

    The normalization sits inside the square root. ``conventional=True`` gives
    ``RMSE / RRbar`` instead; it is reported only, never used for selection.
    """
    rbar = scored.mean_risk()
    sq = float(np.sum((scored.observed - scored.point) ** 2))
    if conventional:
        return float(np.sqrt(sq / scored.m) / rbar)
    return float(np.sqrt(sq / (scored.m * rbar)))


def nis(scored: ScoredForecast) -> float:
    """Interval score normalized by ``m * RRbar``; misses cost ``2 / (1 - alpha)`` per unit."""
    if not 0 < scored.alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {scored.alpha}")
    rbar = scored.mean_risk()
    y, lo, hi = scored.observed, scored.lower, scored.upper
    penalty = 2.0 / (1.0 - scored.alpha)
    below = np.where(y < lo, lo - y, 0.0)
    above = np.where(y > hi, y - hi, 0.0)
    total = np.sum((hi - lo) + penalty * below + penalty * above)
    return float(total / (scored.m * rbar))


@dataclass(frozen=True)
class MethodScore:
    method: str
    nrmse: float
    nis: float


def score(method: str, scored: ScoredForecast) -> MethodScore:
    return MethodScore(method, nrmse(scored), nis(scored))


def best_model(per_method: Mapping[str, ScoredForecast | MethodScore]) -> str:
    """Smallest NIS wins; ties go to smaller NRMSE, then to the method name.

    Accepts either scored forecasts (checked to share the observed series) or
    precomputed :class:`MethodScore` values.
    """
    if not per_method:
        raise ValidationError("no methods to compare")
    observed = [v.observed for v in per_method.values() if isinstance(v, ScoredForecast)]
    if any(o.shape != observed[0].shape or not np.array_equal(o, observed[0]) for o in observed):
        raise MisalignedScores("methods were scored on different observed series")
    scores = [MethodScore(name, v.nrmse, v.nis) if isinstance(v, MethodScore) else score(name, v)
              for name, v in per_method.items()]
    return min(scores, key=lambda s: (s.nis, s.nrmse, s.method)).method
