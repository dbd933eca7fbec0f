"""Monthly canton panels and the relative-risk response.

The panel is the unit every other module consumes: per-canton case counts,
populations and five climate covariates on one shared, gap-free month range,
plus national totals supplied explicitly (never derived from the cantons).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateKey,
    LagTooLarge,
    MissingMonths,
    UnknownCanton,
    ValidationError,
    ZeroNationalCases,
)

NATIONAL_ID = "__national__"
CLIMATE_VARS = ("precip", "ssta", "ndvi", "lst", "tna")


@dataclass(frozen=True, order=True)
class MonthIndex:
    year: int
    month: int

    def __post_init__(self):
        if int(self.year) != self.year or self.year < 1900:
            raise ValidationError(f"year must be an integer >= 1900, got {self.year}")
        if int(self.month) != self.month or not 1 <= self.month <= 12:
            raise ValidationError(f"month must be in 1..12, got {self.month}")
        object.__setattr__(self, "year", int(self.year))
        object.__setattr__(self, "month", int(self.month))

    @classmethod
    def parse(cls, text: str) -> "MonthIndex":
        try:
            y, m = text.strip().split("-")
            return cls(int(y), int(m))
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"expected YYYY-MM, got {text!r}") from None

    @classmethod
    def from_ordinal(cls, k: int) -> "MonthIndex":
        return cls(k // 12, k % 12 + 1)

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    def __add__(self, n: int) -> "MonthIndex":
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        return MonthIndex.from_ordinal(self.ordinal + int(n))

    def __sub__(self, other):
        if isinstance(other, MonthIndex):
            return self.ordinal - other.ordinal
        if isinstance(other, (int, np.integer)):
            return self + (-int(other))
        return NotImplemented

    def __str__(self):
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: MonthIndex, end: MonthIndex) -> tuple[MonthIndex, ...]:
    return tuple(start + i for i in range(end - start + 1))


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_contiguous(months: Sequence[MonthIndex]):
    for a, b in zip(months, months[1:]):
        if b - a != 1:
            raise ValidationError(f"months must be strictly increasing without gaps ({a} -> {b})")


@dataclass(frozen=True)
class ClimateRecord:
    precip: float
    ssta: float
    ndvi: float
    lst: float
    tna: float

    def __post_init__(self):
        vals = self.as_tuple()
        if not all(np.isfinite(vals)):
            raise ValidationError(f"climate values must be finite: {vals}")
        if self.precip < 0:
            raise ValidationError(f"precipitation must be >= 0, got {self.precip}")
        if not -1.0 <= self.ndvi <= 1.0:
            raise ValidationError(f"ndvi must lie in [-1, 1], got {self.ndvi}")
        if self.lst <= 0:
            raise ValidationError(f"land surface temperature must be > 0 K, got {self.lst}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.precip, self.ssta, self.ndvi, self.lst, self.tna)


@dataclass(frozen=True)
class CantonSeries:
    canton_id: str
    months: tuple[MonthIndex, ...]
    cases: np.ndarray
    population: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "months", tuple(self.months))
        object.__setattr__(self, "cases", _frozen(self.cases, np.int64))
        object.__setattr__(self, "population", _frozen(self.population, np.int64))
        n = len(self.months)
        if len(self.cases) != n or len(self.population) != n:
            raise ValidationError(f"{self.canton_id}: cases/population/months lengths differ")
        _check_contiguous(self.months)
        if np.any(self.cases < 0):
            raise ValidationError(f"{self.canton_id}: cases must be non-negative")
        if np.any(self.population <= 0):
            raise ValidationError(f"{self.canton_id}: population must be positive")


@dataclass(frozen=True)
class CantonData:
    series: CantonSeries
    climate: np.ndarray  # (T, 5), columns in CLIMATE_VARS order

    def __post_init__(self):
        clim = _frozen(self.climate)
        if clim.shape != (len(self.series.months), len(CLIMATE_VARS)):
            raise ValidationError(f"{self.series.canton_id}: climate must be T x {len(CLIMATE_VARS)}")
        for row in clim:
            ClimateRecord(*row)
        object.__setattr__(self, "climate", clim)

    def records(self) -> list[ClimateRecord]:
        return [ClimateRecord(*row) for row in self.climate]


@dataclass(frozen=True)
class MonthlyPanel:
    months: tuple[MonthIndex, ...]
    cantons: Mapping[str, CantonData]
    national_cases: np.ndarray
    national_population: np.ndarray
    dropped: Mapping[str, tuple[MonthIndex, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "months", tuple(self.months))
        object.__setattr__(self, "national_cases", _frozen(self.national_cases, np.int64))
        object.__setattr__(self, "national_population", _frozen(self.national_population, np.int64))
        object.__setattr__(self, "cantons", dict(sorted(self.cantons.items())))
        _check_contiguous(self.months)
        n = len(self.months)
        if len(self.national_cases) != n or len(self.national_population) != n:
            raise ValidationError("national totals must cover the panel months")
        if np.any(self.national_population <= 0) or np.any(self.national_cases < 0):
            raise ValidationError("national population must be positive and cases non-negative")
        for cid, data in self.cantons.items():
            if data.series.months != self.months:
                raise ValidationError(f"canton {cid!r} does not span the panel month range")
            if np.any(data.series.cases > self.national_cases):
                raise ValidationError(f"canton {cid!r} has more cases than the national total")
            if np.any(data.series.population > self.national_population):
                raise ValidationError(f"canton {cid!r} has more population than the national total")

    @property
    def canton_ids(self) -> list[str]:
        return list(self.cantons)

    def __getitem__(self, canton_id: str) -> CantonData:
        try:
            return self.cantons[canton_id]
        except KeyError:
            raise UnknownCanton(canton_id) from None

    def month_position(self, month: MonthIndex) -> int:
        pos = month - self.months[0]
        if not 0 <= pos < len(self.months):
            raise ValidationError(f"{month} outside panel range {self.months[0]}..{self.months[-1]}")
        return pos

    def window(self, start: MonthIndex, end: MonthIndex) -> "MonthlyPanel":
        """Sub-panel restricted to ``start..end`` inclusive."""
        i, j = self.month_position(start), self.month_position(end) + 1
        if j <= i:
            raise ValidationError(f"empty window {start}..{end}")
        cantons = {}
        for cid, d in self.cantons.items():
            s = d.series
            cantons[cid] = CantonData(
                CantonSeries(cid, s.months[i:j], s.cases[i:j], s.population[i:j]), d.climate[i:j]
            )
        return MonthlyPanel(self.months[i:j], cantons, self.national_cases[i:j],
                            self.national_population[i:j], self.dropped)


@dataclass(frozen=True)
class RiskSeries:
    canton_id: str
    months: tuple[MonthIndex, ...]
    rr: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rr", _frozen(self.rr))
        if len(self.rr) != len(self.months):
            raise ValidationError("risk series length does not match months")
        if np.any(self.rr < 0) or not np.all(np.isfinite(self.rr)):
            raise ValidationError("relative risk must be finite and non-negative")


def compute_relative_risk(panel: MonthlyPanel, canton_id: str) -> RiskSeries:
    """Canton incidence divided by national incidence, month by month."""
    data = panel[canton_id]
    nat = panel.national_cases
    zero = np.flatnonzero(nat == 0)
    if zero.size:
        raise ZeroNationalCases(panel.months[zero[0]])
    s = data.series
    incidence = s.cases / s.population
    national = nat / panel.national_population
    return RiskSeries(canton_id, panel.months, incidence / national)


def _index_rows(rows, name, ncols):
    table: dict[str, dict[MonthIndex, object]] = defaultdict(dict)
    for row in rows:
        canton, year, month, *vals = row
        if len(vals) != ncols:
            raise ValidationError(f"{name} row {row!r}: expected {ncols} value(s)")
        key = MonthIndex(year, month)
        if key in table[canton]:
            raise DuplicateKey(f"duplicate key ({canton}, {key}) in {name} table")
        table[canton][key] = vals[0] if ncols == 1 else tuple(vals)
    return table


def align_panel(
    cases: Iterable[Sequence],
    population: Iterable[Sequence],
    climate: Iterable[Sequence],
) -> MonthlyPanel:
    """Inner-join raw tables onto their common month range.

    Rows are ``(canton, year, month, value...)``; climate rows carry the five
    covariates in :data:`CLIMATE_VARS` order. National totals are the rows with
    canton id :data:`NATIONAL_ID` in the case and population tables. Months
    outside the common range are dropped and listed in ``panel.dropped``;
    a hole inside the common range raises :class:`MissingMonths`.
    """
    tables = {
        "cases": _index_rows(cases, "cases", 1),
        "population": _index_rows(population, "population", 1),
        "climate": _index_rows(climate, "climate", len(CLIMATE_VARS)),
    }
    for name in ("cases", "population"):
        if NATIONAL_ID not in tables[name]:
            raise ValidationError(f"{name} table has no {NATIONAL_ID!r} rows")
    tables["climate"].pop(NATIONAL_ID, None)
    canton_ids = sorted(set().union(*tables.values()) - {NATIONAL_ID})
    if not canton_ids:
        raise ValidationError("no cantons in input tables")
    for cid in canton_ids:
        for name, table in tables.items():
            if cid not in table:
                raise ValidationError(f"canton {cid!r} absent from {name} table")

    spans = [(min(t[c]), max(t[c])) for t in tables.values() for c in t]
    start = max(s for s, _ in spans)
    end = min(e for _, e in spans)
    if start > end:
        raise ValidationError("input tables share no common month range")
    months = month_range(start, end)

    for cid in [NATIONAL_ID, *canton_ids]:
        for name, table in tables.items():
            if cid not in table:
                continue
            missing = [m for m in months if m not in table[cid]]
            if missing:
                raise MissingMonths(cid, missing, name)

    dropped = {}
    for cid in [NATIONAL_ID, *canton_ids]:
        extra = set()
        for table in tables.values():
            extra.update(m for m in table.get(cid, ()) if not start <= m <= end)
        if extra:
            dropped[cid] = tuple(sorted(extra))

    def column(name, cid):
        return [tables[name][cid][m] for m in months]

    cantons = {}
    for cid in canton_ids:
        series = CantonSeries(cid, months, column("cases", cid), column("population", cid))
        cantons[cid] = CantonData(series, np.array(column("climate", cid), dtype=float))
    return MonthlyPanel(
        months, cantons, column("cases", NATIONAL_ID), column("population", NATIONAL_ID), dropped
    )


def lag_matrix(x, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of lagged copies, entry ``(t, l) = x[t - l]``.

    Returns the ``T x (max_lag + 1)`` matrix (NaN where ``t < l``) and a boolean
    vector marking rows with a complete lag history.
    """
    x = np.asarray(x, dtype=float)
    T = len(x)
    if max_lag < 0 or max_lag >= T:
        raise LagTooLarge(f"max_lag={max_lag} must satisfy 0 <= max_lag < {T}")
    out = np.full((T, max_lag + 1), np.nan)
    for lag in range(max_lag + 1):
        out[lag:, lag] = x[: T - lag]
    complete = np.arange(T) >= max_lag
    return out, complete
