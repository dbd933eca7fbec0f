"""Command-line interface: ``lagcast {simulate,fit,forecast,evaluate,report}``.

Exit status is 0 on success, 1 for invalid input or missing files, 2 for
numerical failures. Errors go to standard error as one line.
"""
from __future__ import annotations

import argparse
import shutil
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import LagcastError, MissingArtifact, ValidationError
from .io import load_tables, read_csv, read_fit, write_csv, write_fit, write_panel
from .panel import CLIMATE_VARS, MonthIndex, MonthlyPanel
from .pipeline import (
    ForecastResult,
    evaluate,
    fit_canton,
    observed_risk,
    persistence_forecast,
    run_panel,
)
from .simulate import SimConfig, simulate_panel

RISK_HEADER = ("canton", "method", "month", "point", "lower95", "upper95")
CLIMATE_FC_HEADER = ("canton", "series", "month", "mean", "lower95", "upper95")
SCORES_HEADER = ("canton", "NRMSE", "NIS95", "best_model")
SCORES_ALL_HEADER = ("canton", "method", "NRMSE", "NIS95")
TRUTH_HEADER = ("canton", "intercept", "rr_ar", "sigma", "nu", "population",
                *(f"effect_{v}" for v in CLIMATE_VARS), *(f"season_{m}" for m in range(1, 13)))
TRUTH_PATH_HEADER = ("canton", "year", "month", "mu", "rr")


# ---- shared helpers -------------------------------------------------------

def load_panel(cfg: RunConfig) -> MonthlyPanel:
    if cfg.simulate is not None:
        s = cfg.simulate
        return simulate_panel(SimConfig(n_cantons=s.cantons, n_months=s.months, start=s.start), s.seed)[0]
    return load_tables(cfg.cases, cfg.population, cfg.climate)


def resolve_windows(cfg: RunConfig, panel: MonthlyPanel) -> RunConfig:
    """Fill in the training window: by default the last ``horizon`` months are held out."""
    train_start = cfg.train_start or panel.months[0]
    train_end = cfg.train_end or panel.months[-1 - cfg.horizon]
    if train_start < panel.months[0] or train_end > panel.months[-1]:
        raise ValidationError(f"training window {train_start}..{train_end} is outside the data "
                              f"({panel.months[0]}..{panel.months[-1]})")
    return replace(cfg, train_start=train_start, train_end=train_end)


def _setup(config_path):
    cfg = load_config(config_path)
    panel = load_panel(cfg)
    return resolve_windows(cfg, panel), panel


def _fit_path(cfg, canton, method):
    return cfg.output / "fits" / f"{canton}.{method}.txt"


# ---- subcommands ----------------------------------------------------------

def cmd_simulate(args) -> int:
    out = Path(args.out)
    cfg = SimConfig(n_cantons=args.cantons, n_months=args.months)
    panel, truth = simulate_panel(cfg, args.seed)
    write_panel(panel, out)
    rows, path_rows = [], []
    for cid, t in truth.cantons.items():
        rows.append((cid, t.intercept, t.rr_ar, t.sigma, t.nu, t.population, *t.climate_effects, *t.seasonal))
        for i, m in enumerate(panel.months):
            path_rows.append((cid, m.year, m.month, t.mu[i], t.rr_latent[i]))
    write_csv(out / "truth.csv", TRUTH_HEADER, rows)
    write_csv(out / "truth_path.csv", TRUTH_PATH_HEADER, path_rows)
    (out / "lagcast.cfg").write_text(
        "# generated by 'lagcast simulate'\n"
        "data.cases = cases.csv\n"
        "data.population = population.csv\n"
        "data.climate = climate.csv\n"
        f"seed = {args.seed}\n"
        "output = run\n", encoding="utf-8")
    return 0


def cmd_fit(args) -> int:
    cfg, panel = _setup(args.config)
    spec = cfg.canton_spec()
    fits = [fit_canton(panel, cid, spec) for cid in panel.canton_ids]
    for cf in fits:
        for method, model in cf.fits.items():
            write_fit(_fit_path(cfg, cf.canton_id, method), model)
        months = cf.months[len(cf.months) - len(cf.y):]
        rows = [(str(m), cf.y[i], *(cf.fitted[meth][i] for meth in spec.methods)) for i, m in enumerate(months)]
        write_csv(cfg.output / "train_fit" / f"{cf.canton_id}.csv",
                  ("month", "observed", *(f"fitted_{m}" for m in spec.methods)), rows)
    return 0


def cmd_forecast(args) -> int:
    cfg, panel = _setup(args.config)
    spec = cfg.canton_spec()
    fits = {cid: {m: read_fit(_fit_path(cfg, cid, m), m) for m in spec.methods} for cid in panel.canton_ids}
    results = run_panel(panel, spec, panel.canton_ids, fits)
    risk_rows, climate_rows, base_rows = [], [], []
    for r in results:
        cid = r.fit.canton_id
        for method in spec.methods:
            f = r.forecasts[method]
            risk_rows += [(cid, method, str(m), f.point[s], f.lower[s], f.upper[s]) for s, m in enumerate(f.months)]
        p = persistence_forecast(r.fit)
        base_rows += [(cid, p.method, str(m), p.point[s], p.lower[s], p.upper[s]) for s, m in enumerate(p.months)]
        c = r.climate
        for j, name in enumerate(CLIMATE_VARS):
            climate_rows += [(cid, name, str(m), c.mean[s, j], c.lower[s, j], c.upper[s, j])
                             for s, m in enumerate(p.months)]
    write_csv(cfg.output / "forecast" / "risk.csv", RISK_HEADER, risk_rows)
    write_csv(cfg.output / "forecast" / "baseline.csv", RISK_HEADER, base_rows)
    write_csv(cfg.output / "forecast" / "climate.csv", CLIMATE_FC_HEADER, climate_rows)
    return 0


def read_forecasts(path) -> list[ForecastResult]:
    rows = read_csv(path, RISK_HEADER)[1:]
    grouped: dict[tuple[str, str], list] = {}
    for row in rows:
        grouped.setdefault((row[0], row[1]), []).append(row)
    out = []
    for (cid, method), rs in grouped.items():
        vals = np.array([[float(v) for v in r[3:]] for r in rs])
        out.append(ForecastResult(cid, method, tuple(MonthIndex.parse(r[2]) for r in rs),
                                  vals[:, 0], vals[:, 1], vals[:, 2]))
    return out


def cmd_evaluate(args) -> int:
    cfg, panel = _setup(args.config)
    path = cfg.output / "forecast" / "risk.csv"
    if not path.is_file():
        raise MissingArtifact(f"missing forecast file: {path} (run 'lagcast forecast' first)")
    results = read_forecasts(path)
    observed = {}
    for r in results:
        if r.canton_id not in observed:
            observed[r.canton_id] = observed_risk(panel, r.canton_id, r.months)
    report = evaluate(results, observed)
    out = cfg.output / "evaluate"
    write_csv(out / "scores.csv", SCORES_HEADER,
              [(row.canton_id, row.best.nrmse, row.best.nis, row.best_model) for row in report.rows])
    write_csv(out / "scores_all.csv", SCORES_ALL_HEADER,
              [(row.canton_id, m, s.nrmse, s.nis) for row in report.rows for m, s in sorted(row.scores.items())])
    by_canton: dict[str, dict[str, ForecastResult]] = {}
    for r in results:
        by_canton.setdefault(r.canton_id, {})[r.method] = r
    for cid, per in sorted(by_canton.items()):
        methods = sorted(per)
        header = ["month", "observed"]
        for m in methods:
            header += [f"point_{m}", f"lower95_{m}", f"upper95_{m}"]
        months = per[methods[0]].months
        rows = []
        for s, month in enumerate(months):
            row = [str(month), observed[cid][s]]
            for m in methods:
                row += [per[m].point[s], per[m].lower[s], per[m].upper[s]]
            rows.append(row)
        write_csv(out / "test_forecast" / f"{cid}.csv", header, rows)
    return 0


def _concat(files: list[Path], dest: Path, key: str):
    """Concatenate per-canton CSVs under one header, prefixing a ``canton`` column."""
    header, rows = None, []
    for f in files:
        data = read_csv(f)
        if header is None:
            header = [key, *data[0]]
        elif data[0] != header[1:]:
            raise ValidationError(f"{f}: header differs from {files[0]}")
        rows += [[f.stem, *r] for r in data[1:]]
    write_csv(dest, header, rows)


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    out = cfg.output
    dest = out / "report"
    needed = [out / "evaluate" / "scores.csv", out / "evaluate" / "scores_all.csv",
              out / "forecast" / "risk.csv", out / "forecast" / "climate.csv", out / "forecast" / "baseline.csv"]
    for p in needed:
        if not p.is_file():
            raise MissingArtifact(f"missing file: {p} (run fit, forecast and evaluate first)")
    dest.mkdir(parents=True, exist_ok=True)
    names = ["scores.csv", "scores_all.csv", "forecast_risk.csv", "forecast_climate.csv", "forecast_baseline.csv"]
    for src, name in zip(needed, names):
        shutil.copyfile(src, dest / name)
    for sub, name in (("train_fit", "train_fit.csv"), ("evaluate/test_forecast", "test_forecast.csv")):
        files = sorted((out / sub).glob("*.csv"))
        if not files:
            raise MissingArtifact(f"no CSV files in {out / sub}")
        _concat(files, dest / name, "canton")
    return 0


# ---- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lagcast", description="Climate-driven relative-risk forecasting.")
    sub = ap.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="write a synthetic panel, its ground truth and a starter config")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--cantons", type=int, default=4)
    sim.add_argument("--months", type=int, default=252)
    sim.add_argument("--out", default="lagcast-sim")
    sim.set_defaults(func=cmd_simulate)
    for name, func, text in (("fit", cmd_fit, "fit every method per canton on the training window"),
                             ("forecast", cmd_forecast, "forecast climate and risk with bootstrap intervals"),
                             ("evaluate", cmd_evaluate, "score forecasts against the held-out months"),
                             ("report", cmd_report, "collect all outputs into one directory")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="flat key = value configuration file")
        p.set_defaults(func=func)
    return ap


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, LagcastError):
        return exc.exit_code
    if isinstance(exc, (OSError, ValueError, KeyError)):
        return 1
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # every failure maps to a documented exit status
        print(f"lagcast {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
