"""Variable-space and lag-space bases and their tensor-product cross-basis."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBoundary, KnotsOutOfRange, LagTooLarge, ValidationError
from .panel import lag_matrix

KINDS = ("linear", "bspline")


@dataclass(frozen=True)
class BasisSpec:
    kind: str = "linear"
    degree: int = 3
    df: int = 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"basis kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "bspline":
            if self.degree < 1:
                raise ValidationError(f"B-spline degree must be >= 1, got {self.degree}")
            if self.df < self.degree + 1:
                raise ValidationError(f"B-spline df must be >= degree + 1, got df={self.df}")

    @property
    def n_internal_knots(self) -> int:
        return self.df - self.degree - 1 if self.kind == "bspline" else 0


def _cox_de_boor(x: np.ndarray, t: np.ndarray, degree: int) -> np.ndarray:
    n = len(x)
    # degree-0 indicators on [t_i, t_{i+1}); the right boundary belongs to the last non-empty span
    span = np.searchsorted(t, x, side="right") - 1
    last = np.flatnonzero(t[:-1] < t[1:])[-1]
    span = np.where(x >= t[-1], last, span)
    B = np.zeros((n, len(t) - 1))
    B[np.arange(n), span] = 1.0
    for k in range(1, degree + 1):
        nxt = np.zeros((n, len(t) - 1 - k))
        for i in range(len(t) - 1 - k):
            left = t[i + k] - t[i]
            right = t[i + k + 1] - t[i + 1]
            if left > 0:
                nxt[:, i] += (x - t[i]) / left * B[:, i]
            if right > 0:
                nxt[:, i] += (t[i + k + 1] - x) / right * B[:, i + 1]
        B = nxt
    return B


def bspline_basis(x, spec: BasisSpec, boundary: tuple[float, float], knots=()) -> np.ndarray:
    """Full B-spline basis (``T x df``) by Cox-de Boor recursion.

    No column is dropped: rows form a partition of unity and removing the
    redundant direction is left to the regression design.
    """
    if spec.kind != "bspline":
        raise ValidationError("bspline_basis needs a bspline BasisSpec")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = map(float, boundary)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise DegenerateBoundary(f"boundary must satisfy lo < hi, got ({lo}, {hi})")
    knots = np.sort(np.asarray(knots, dtype=float))
    if len(knots) != spec.n_internal_knots:
        raise ValidationError(f"expected {spec.n_internal_knots} internal knots, got {len(knots)}")
    if np.any(knots <= lo) or np.any(knots >= hi):
        raise KnotsOutOfRange(f"internal knots {knots.tolist()} must lie strictly inside ({lo}, {hi})")
    if np.any(~np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
        raise ValidationError(f"x must lie within the boundary [{lo}, {hi}]")
    t = np.concatenate([np.repeat(lo, spec.degree + 1), knots, np.repeat(hi, spec.degree + 1)])
    return _cox_de_boor(x, t, spec.degree)


def linear_basis(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise ValidationError("linear basis requires finite values")
    return x.reshape(-1, 1).copy()


def quantile_knots(x, n_internal: int) -> np.ndarray:
    """Internal knots at equally spaced empirical quantiles of ``x``."""
    if n_internal == 0:
        return np.empty(0)
    probs = np.arange(1, n_internal + 1) / (n_internal + 1)
    return np.quantile(np.asarray(x, dtype=float), probs)


@dataclass(frozen=True)
class VariableBasis:
    """A variable-space basis with its boundary and knots frozen from training data."""

    spec: BasisSpec
    boundary: tuple[float, float] | None = None
    knots: tuple[float, ...] = ()

    @classmethod
    def fit(cls, spec: BasisSpec, x) -> "VariableBasis":
        if spec.kind == "linear":
            return cls(spec)
        x = np.asarray(x, dtype=float)
        x = x[np.isfinite(x)]
        lo, hi = float(np.min(x)), float(np.max(x))
        if not lo < hi:
            raise DegenerateBoundary(f"training values are constant ({lo}); B-spline boundary degenerate")
        return cls(spec, (lo, hi), tuple(quantile_knots(x, spec.n_internal_knots)))

    @property
    def dim(self) -> int:
        return 1 if self.spec.kind == "linear" else self.spec.df

    def transform(self, x) -> tuple[np.ndarray, int]:
        """Evaluate the basis, clamping B-spline inputs to the training boundary.

        Returns the matrix and the number of clamped values.
        """
        if self.spec.kind == "linear":
            return linear_basis(x), 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.boundary
        clipped = np.clip(x, lo, hi)
        n_clamped = int(np.count_nonzero(clipped != x))
        if n_clamped:
            warnings.warn(f"{n_clamped} value(s) clamped to basis boundary [{lo:.6g}, {hi:.6g}]",
                          stacklevel=2)
        return bspline_basis(clipped, self.spec, self.boundary, self.knots), n_clamped


def lag_basis(spec: BasisSpec, max_lag: int) -> np.ndarray:
    """Lag-space basis evaluated on lags ``0..max_lag``.

    A linear lag basis is ``[1, lag]``; on a single lag it is just the
    constant column.
    """
    lags = np.arange(max_lag + 1, dtype=float)
    if max_lag == 0:
        return np.ones((1, 1))
    if spec.kind == "linear":
        return np.column_stack([np.ones_like(lags), lags])
    knots = quantile_knots(lags, spec.n_internal_knots)
    return bspline_basis(lags, spec, (0.0, float(max_lag)), knots)


@dataclass(frozen=True)
class CrossBasis:
    matrix: np.ndarray
    var_spec: BasisSpec
    lag_spec: BasisSpec
    max_lag: int
    valid_from: int
    var_basis: VariableBasis
    lag_values: np.ndarray
    name: str = "x"
    n_clamped: int = 0
    columns: tuple[str, ...] = field(default=())

    @property
    def v(self) -> int:
        return self.var_basis.dim

    @property
    def l(self) -> int:
        return self.lag_values.shape[1]

    def apply(self, x) -> "CrossBasis":
        """Cross-basis of a new series under this basis's frozen knots."""
        return cross_basis(x, self.max_lag, self.var_spec, self.lag_spec,
                           var_basis=self.var_basis, name=self.name)


def cross_basis(
    x,
    max_lag: int,
    var_spec: BasisSpec,
    lag_spec: BasisSpec,
    var_basis: VariableBasis | None = None,
    name: str = "x",
) -> CrossBasis:
    """Tensor-product cross-basis of a series.

    Column ``j * l + k`` at row ``t`` is ``sum_lag B_j(x[t - lag]) * C_k(lag)``.
    Rows before ``max_lag`` lack a full lag history and are NaN.
    """
    x = np.asarray(x, dtype=float)
    if max_lag < 0 or max_lag >= len(x):
        raise LagTooLarge(f"max_lag={max_lag} must be < series length {len(x)}")
    if var_basis is None:
        var_basis = VariableBasis.fit(var_spec, x)
    B, n_clamped = var_basis.transform(x)
    C = lag_basis(lag_spec, max_lag)
    T, v = B.shape
    lagged = np.stack([lag_matrix(B[:, j], max_lag)[0] for j in range(v)], axis=2)  # T x (L+1) x v
    mat = np.einsum("tlv,lk->tvk", lagged, C).reshape(T, v * C.shape[1])
    mat.setflags(write=False)
    cols = tuple(f"{name}.v{j}.l{k}" for j in range(v) for k in range(C.shape[1]))
    return CrossBasis(mat, var_spec, lag_spec, max_lag, max_lag, var_basis, C, name, n_clamped, cols)
