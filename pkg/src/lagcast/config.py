"""Run configuration: flat ``key = value`` files.

One pair per line, ``#`` starts a comment, blank lines are ignored. Relative
paths resolve against the config file's directory. Unknown keys are errors.

Example::

    data.cases = cases.csv
    data.population = population.csv
    data.climate = climate.csv
    train.end = 2020-12
    test.start = 2021-01
    test.horizon = 3
    bootstrap.block = 6
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .basis import BasisSpec
from .errors import ConstraintViolation, ParseError, UnknownKey, ValidationError
from .forest import ForestConfig
from .panel import CLIMATE_VARS, MonthIndex
from .pipeline import METHODS, CantonSpec, default_bases


@dataclass(frozen=True)
class SimulateSettings:
    cantons: int = 4
    months: int = 252
    seed: int = 0
    start: MonthIndex = MonthIndex(2000, 1)


@dataclass(frozen=True)
class RunConfig:
    cases: Path | None = None
    population: Path | None = None
    climate: Path | None = None
    simulate: SimulateSettings | None = None
    bases: dict = field(default_factory=default_bases)
    max_lag: int = 18
    methods: tuple[str, ...] = METHODS
    point: str = "mean"
    train_start: MonthIndex | None = None
    train_end: MonthIndex | None = None
    test_start: MonthIndex | None = None
    horizon: int = 3
    n_boot: int = 100
    block: int = 6
    forest: ForestConfig = field(default_factory=ForestConfig)
    var_p_max: int = 13
    var_trend: bool = True
    var_seasonal: bool = True
    var_standardize: bool = False
    seed: int = 0
    output: Path = Path("lagcast-out")

    def canton_spec(self) -> CantonSpec:
        return CantonSpec(bases=self.bases, max_lag=self.max_lag, methods=self.methods,
                          train_start=self.train_start, train_end=self.train_end,
                          horizon=self.horizon, n_boot=self.n_boot, block=self.block,
                          seed=self.seed, forest=self.forest, point=self.point,
                          var_p_max=self.var_p_max, var_trend=self.var_trend,
                          var_seasonal=self.var_seasonal, var_standardize=self.var_standardize)


def _int(v: str) -> int:
    return int(v)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _methods(v: str) -> tuple[str, ...]:
    if v == "both":
        return METHODS
    out = tuple(m.strip() for m in v.split(",") if m.strip())
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise ValueError(f"methods must be gamlss, rf, both or a comma list, got {v!r}")
    return tuple(m for m in METHODS if m in out)


def _point(v: str) -> str:
    if v not in ("mean", "mu", "median"):
        raise ValueError(f"point must be mean, mu or median, got {v!r}")
    return v


def _kind(v: str) -> str:
    if v not in ("linear", "bspline"):
        raise ValueError(f"basis kind must be linear or bspline, got {v!r}")
    return v


SCALAR_KEYS: dict[str, tuple[str, Callable]] = {
    "data.cases": ("cases", Path),
    "data.population": ("population", Path),
    "data.climate": ("climate", Path),
    "model.max_lag": ("max_lag", _int),
    "model.methods": ("methods", _methods),
    "model.point": ("point", _point),
    "train.start": ("train_start", MonthIndex.parse),
    "train.end": ("train_end", MonthIndex.parse),
    "test.start": ("test_start", MonthIndex.parse),
    "test.horizon": ("horizon", _int),
    "bootstrap.replicates": ("n_boot", _int),
    "bootstrap.block": ("block", _int),
    "var.p_max": ("var_p_max", _int),
    "var.trend": ("var_trend", _bool),
    "var.seasonal": ("var_seasonal", _bool),
    "var.standardize": ("var_standardize", _bool),
    "seed": ("seed", _int),
    "output": ("output", Path),
}
SIMULATE_KEYS = {"simulate.cantons": ("cantons", _int), "simulate.months": ("months", _int),
                 "simulate.seed": ("seed", _int), "simulate.start": ("start", MonthIndex.parse)}
FOREST_KEYS = {"forest.trees": ("n_trees", _int), "forest.mtry": ("mtry", _int),
               "forest.min_node_size": ("min_node_size", _int)}
BASIS_FIELDS = {"var": ("var_kind", _kind), "lag": ("lag_kind", _kind),
                "degree": ("degree", _int), "df": ("df", _int)}


def parse_pairs(text: str) -> list[tuple[int, str, str]]:
    pairs, seen = [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ParseError(lineno, "empty key or value")
        if key in seen:
            raise ParseError(lineno, f"duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        pairs.append((lineno, key, value))
    return pairs


def _convert(lineno, key, value, fn):
    try:
        return fn(value)
    except (ValueError, ValidationError) as exc:
        raise ParseError(lineno, f"{key}: {exc}") from None


def parse_config(text: str, base: Path = Path(".")) -> RunConfig:
    fields: dict = {}
    sim: dict = {}
    forest: dict = {}
    basis: dict[str, dict] = {}
    for lineno, key, value in parse_pairs(text):
        if key in SCALAR_KEYS:
            name, fn = SCALAR_KEYS[key]
            fields[name] = _convert(lineno, key, value, fn)
        elif key in SIMULATE_KEYS:
            name, fn = SIMULATE_KEYS[key]
            sim[name] = _convert(lineno, key, value, fn)
        elif key in FOREST_KEYS:
            name, fn = FOREST_KEYS[key]
            forest[name] = _convert(lineno, key, value, fn)
        elif key.startswith("basis."):
            parts = key.split(".")
            if len(parts) != 3 or parts[1] not in CLIMATE_VARS or parts[2] not in BASIS_FIELDS:
                raise UnknownKey(f"line {lineno}: unknown key {key!r}")
            name, fn = BASIS_FIELDS[parts[2]]
            basis.setdefault(parts[1], {})[name] = _convert(lineno, key, value, fn)
        else:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")

    for name in ("cases", "population", "climate", "output"):
        if name in fields and not fields[name].is_absolute():
            fields[name] = base / fields[name]
    try:
        if sim:
            fields["simulate"] = SimulateSettings(**sim)
        if forest:
            fields["forest"] = ForestConfig(**forest)
        if basis:
            fields["bases"] = _merge_bases(basis)
        cfg = RunConfig(**fields)
    except ValidationError as exc:
        raise ConstraintViolation(str(exc)) from None
    validate(cfg)
    return cfg


def _merge_bases(overrides: dict[str, dict]) -> dict:
    bases = dict(default_bases())
    for cov, o in overrides.items():
        var, lag = bases[cov]
        var = BasisSpec(o.get("var_kind", var.kind), degree=o.get("degree", var.degree), df=o.get("df", var.df))
        lag = BasisSpec(o.get("lag_kind", lag.kind), degree=lag.degree, df=lag.df)
        bases[cov] = (var, lag)
    return bases


def validate(cfg: RunConfig) -> None:
    paths = [cfg.cases, cfg.population, cfg.climate]
    if cfg.simulate is None:
        if not all(paths):
            raise ConstraintViolation(
                "no input data: set data.cases, data.population and data.climate, or a simulate.* block")
        for p in paths:
            if not p.is_file():
                raise ConstraintViolation(f"input file does not exist: {p}")
    elif any(paths):
        raise ConstraintViolation("data.* paths and a simulate.* block are mutually exclusive")
    if cfg.simulate is not None and (cfg.simulate.cantons < 2 or cfg.simulate.months < 60):
        raise ConstraintViolation("simulate needs at least 2 cantons and 60 months")
    if cfg.train_start and cfg.train_end and cfg.train_start > cfg.train_end:
        raise ConstraintViolation("train.start is after train.end")
    if cfg.test_start is not None:
        if cfg.train_end is None:
            raise ConstraintViolation("test.start requires train.end")
        if cfg.test_start != cfg.train_end + 1:
            raise ConstraintViolation(
                f"test window must start right after training: expected {cfg.train_end + 1}, got {cfg.test_start}")
    if cfg.horizon < 1:
        raise ConstraintViolation("test.horizon must be >= 1")
    if cfg.n_boot < 0 or cfg.block < 1:
        raise ConstraintViolation("bootstrap.replicates must be >= 0 and bootstrap.block >= 1")
    if cfg.max_lag < 0 or cfg.var_p_max < 1:
        raise ConstraintViolation("model.max_lag must be >= 0 and var.p_max >= 1")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConstraintViolation(f"config file does not exist: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(0, f"config is not UTF-8: {exc}") from None
    return parse_config(text, path.parent)


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    out = replace(cfg, **changes)
    validate(out)
    return out
