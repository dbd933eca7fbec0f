"""CSV schemas, artifact files and deterministic number formatting.

Floats are written with 17 significant digits, so reading a file back and
writing it again reproduces it byte for byte.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import HeaderMismatch, MissingArtifact, NonNumericField
from .forest import ForestModel
from .gamlss import ZagaFit
from .panel import CLIMATE_VARS, NATIONAL_ID, MonthlyPanel, align_panel

CASES_HEADER = ("canton", "year", "month", "cases")
POPULATION_HEADER = ("canton", "year", "month", "population")
CLIMATE_HEADER = ("canton", "year", "month", *CLIMATE_VARS)


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v == 0:
            return "0"  # folds -0.0
        return f"{v:.17g}"
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path, header: Sequence[str] | None = None) -> list[list[str]]:
    """Rows as strings; with ``header`` the first line must match it exactly."""
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"missing file: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise HeaderMismatch(f"{path}: empty file, expected header {','.join(header or ())}")
    if header is not None and tuple(rows[0]) != tuple(header):
        raise HeaderMismatch(f"{path}: header {','.join(rows[0])!r} does not match {','.join(header)!r}")
    return rows


def _parse_int(text, path, row, name, minimum):
    try:
        v = int(text)
    except ValueError:
        raise NonNumericField(path, row, f"{name} {text!r} is not an integer") from None
    if v < minimum:
        raise NonNumericField(path, row, f"{name} {v} is below {minimum}")
    return v


def _parse_float(text, path, row, name):
    try:
        v = float(text)
    except ValueError:
        raise NonNumericField(path, row, f"{name} {text!r} is not a number") from None
    if not math.isfinite(v):
        raise NonNumericField(path, row, f"{name} {text!r} is not finite")
    return v


def read_table(path, header: Sequence[str], kind: str) -> list[tuple]:
    """Parse a cases, population or climate table into ``(canton, year, month, values...)`` rows."""
    rows = read_csv(path, header)
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise NonNumericField(path, i, f"expected {len(header)} fields, got {len(row)}")
        canton = row[0]
        if not canton:
            raise NonNumericField(path, i, "empty canton id")
        year = _parse_int(row[1], path, i, "year", 1)
        month = _parse_int(row[2], path, i, "month", 1)
        if month > 12:
            raise NonNumericField(path, i, f"month {month} is above 12")
        if kind == "cases":
            vals = [_parse_int(row[3], path, i, "cases", 0)]
        elif kind == "population":
            vals = [_parse_int(row[3], path, i, "population", 1)]
        else:
            vals = [_parse_float(v, path, i, name) for v, name in zip(row[3:], CLIMATE_VARS)]
        out.append((canton, year, month, *vals))
    return out


def load_tables(cases_path, population_path, climate_path) -> MonthlyPanel:
    return align_panel(read_table(cases_path, CASES_HEADER, "cases"),
                       read_table(population_path, POPULATION_HEADER, "population"),
                       read_table(climate_path, CLIMATE_HEADER, "climate"))


def write_panel(panel: MonthlyPanel, outdir) -> list[Path]:
    outdir = Path(outdir)
    cases, pops, climate = [], [], []
    for t, m in enumerate(panel.months):
        cases.append((NATIONAL_ID, m.year, m.month, panel.national_cases[t]))
        pops.append((NATIONAL_ID, m.year, m.month, panel.national_population[t]))
    for cid in panel.canton_ids:
        data = panel[cid]
        for t, m in enumerate(panel.months):
            cases.append((cid, m.year, m.month, data.series.cases[t]))
            pops.append((cid, m.year, m.month, data.series.population[t]))
            climate.append((cid, m.year, m.month, *data.climate[t]))
    return [write_csv(outdir / "cases.csv", CASES_HEADER, cases),
            write_csv(outdir / "population.csv", POPULATION_HEADER, pops),
            write_csv(outdir / "climate.csv", CLIMATE_HEADER, climate)]


def write_fit(path, fit: ZagaFit | ForestModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(fit.to_text(), encoding="utf-8")
    return path


def read_fit(path, method: str) -> ZagaFit | ForestModel:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"missing fit artifact: {path} (run 'lagcast fit' first)")
    text = path.read_text(encoding="utf-8")
    return ZagaFit.from_text(text) if method == "gamlss" else ForestModel.from_text(text)
