"""The eight acceptance criteria, each at its stated tolerance and time budget.

Every test records a one-line verdict that is printed in the pytest summary.
"""
import math
import time

import numpy as np

from conftest import ACCEPTANCE
from oracles import cross_basis_naive
from test_basis import random_spec, LIN
from test_gamlss import zaga_regression
from test_var import months_for, simulate_var
from test_zadist import random_triples, total_mass
from lagcast.basis import BasisSpec, bspline_basis, cross_basis, lag_basis, quantile_knots
from lagcast.cli import main
from lagcast.forest import ForestConfig, fit_forest, oob_rmse, predict_forest
from lagcast.gamlss import fit_zaga
from lagcast.metrics import ScoredForecast, nis, nrmse
from lagcast.pipeline import CantonSpec, observed_risk, persistence_forecast, run_panel
from lagcast.simulate import SimConfig, simulate_panel
from lagcast.var import fit_var, forecast_var, select_lag_bic
from lagcast.zadist import ZagaParams, ZaigParams, zaga_moments, zaga_pdf, zaga_sample, zaig_pdf


def verdict(n: int, ok: bool, detail: str, elapsed: float, budget: float):
    ok = bool(ok) and elapsed < budget
    ACCEPTANCE[n] = (ok, f"{detail}; {elapsed:.1f}s (budget {budget:.0f}s)")
    assert ok, ACCEPTANCE[n][1]


def test_criterion_1_distributions():
    t0 = time.perf_counter()
    worst = 0.0
    for pdf, cls, seed in ((zaga_pdf, ZagaParams, 0), (zaig_pdf, ZaigParams, 1)):
        for mu, sigma, nu in random_triples(50, seed):
            worst = max(worst, abs(total_mass(pdf, cls(mu, sigma, nu)) - 1))
    z_max = 0.0
    n = 1_000_000
    for i, (mu, sigma, nu) in enumerate([(1.0, 0.5, 0.16), (3.0, 1.2, 0.4), (0.4, 0.3, 0.0)]):
        p = ZagaParams(mu, sigma, nu)
        x = zaga_sample(p, n, seed=100 + i)
        mean, var = zaga_moments(p)
        m4 = np.mean((x - x.mean()) ** 4)
        z_max = max(z_max, abs(x.mean() - mean) / math.sqrt(var / n),
                    abs(x.var() - var) / math.sqrt((m4 - x.var() ** 2) / n))
    elapsed = time.perf_counter() - t0
    verdict(1, worst < 1e-8 and z_max < 3,
            f"max |nu + integral - 1| = {worst:.1e} over 100 triples, max moment z = {z_max:.2f}", elapsed, 30)


def test_criterion_2_gamlss_recovery():
    t0 = time.perf_counter()
    beta = np.array([0.5, 0.3, -0.2, 0.4, 0.1, -0.3, 0.2, 0.0])
    good, nu_exact = 0, True
    for rep in range(100):
        X, y = zaga_regression(5000, beta, seed=1000 + rep)
        fit = fit_zaga(X, y)
        good += bool(np.all(np.abs(fit.beta_mu - beta) <= 3 * fit.standard_errors))
        nu_exact &= fit.nu_hat == np.count_nonzero(y == 0) / len(y)
    elapsed = time.perf_counter() - t0
    verdict(2, good >= 95 and nu_exact, f"{good}/100 replications within 3 SE, nu_hat exact: {nu_exact}",
            elapsed, 120)


def test_criterion_3_cross_basis():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(5, 60))
        L = int(rng.integers(0, T))
        x = rng.normal(size=T)
        vspec, lspec = random_spec(rng), random_spec(rng)
        if L == 0 and lspec.kind == "bspline":
            lspec = LIN
        cb = cross_basis(x, L, vspec, lspec)
        B, _ = cb.var_basis.transform(x)
        ref = cross_basis_naive(B, lag_basis(lspec, L), L)
        assert np.array_equal(np.isnan(cb.matrix), np.isnan(ref))
        ok = ~np.isnan(ref)
        if ok.any():
            worst = max(worst, np.max(np.abs(cb.matrix[ok] - ref[ok])))
    rows = 0.0
    for seed in range(20):
        r = np.random.default_rng(seed)
        spec = BasisSpec("bspline", degree=int(r.integers(1, 4)), df=int(r.integers(4, 9)))
        x = r.gamma(2.0, 50.0, 500)
        B = bspline_basis(x, spec, (x.min(), x.max()), quantile_knots(x, spec.n_internal_knots))
        rows = max(rows, np.max(np.abs(B.sum(axis=1) - 1)))
    elapsed = time.perf_counter() - t0
    verdict(3, worst <= 1e-10 and rows <= 1e-12,
            f"max oracle gap {worst:.1e} on 100 instances, max |row sum - 1| = {rows:.1e}", elapsed, 60)


def test_criterion_4_var():
    t0 = time.perf_counter()
    k = 5
    A = np.stack([0.3 * np.eye(k), 0.45 * np.eye(k)])
    A[0, 0, 1] = 0.1
    picks = [select_lag_bic(simulate_var(A, 252, 500 + s), 13, months_for(252)) for s in range(50)]
    hits = sum(p == 2 for p in picks)
    T, h = 252, 12
    t = np.arange(1, T + h + 1)
    months = np.array(months_for(T + h))
    season = np.array([0.0, 1.5, -2, 3, 0.5, -1, 2, -0.5, 1, -3, 0.25, 4])
    y = np.column_stack([0.1 * t + season[months - 1], 5 - 0.02 * t + 0.5 * season[months - 1],
                         np.full(T + h, 2.0) + 0.3 * season[months - 1] - 0.01 * t])
    m = fit_var(y[:T], 2, months[:T])
    err = np.max(np.abs(forecast_var(m, y[:T], h, T, int(months[T - 1])).mean - y[T:]))
    elapsed = time.perf_counter() - t0
    verdict(4, hits >= 40 and err < 1e-8, f"p=2 chosen in {hits}/50, noiseless forecast error {err:.1e}",
            elapsed, 120)


def sf(obs, point, lo, hi):
    return ScoredForecast(*(np.asarray(v, float) for v in (obs, point, lo, hi)), 0.95)


def test_criterion_5_metrics():
    t0 = time.perf_counter()
    checks = {
        "perfect nrmse": (nrmse(sf([1, 2], [1, 2], [0, 0], [3, 3])), 0.0),
        "nrmse sqrt2": (nrmse(sf([2], [0], [0], [1])), math.sqrt(2)),
        "nis covered": (nis(sf([1], [1], [0], [2])), 2.0),
    }
    penal = sf([3], [1], [0], [2])
    checks["nis 42 penalty"] = (nis(penal) * penal.m * penal.mean_risk(), 42.0)
    # hand arithmetic on a three-month window
    obs, point, lo, hi = [1.0, 0.5, 4.0], [1.5, 0.5, 2.0], [0.5, 0.6, 1.0], [2.0, 1.0, 3.5]
    mean = sum(obs) / 3
    hand_nrmse = math.sqrt((0.25 + 0 + 4.0) / (3 * mean))
    hand_nis = ((1.5 + 0.4 + 2.5) + 40 * (0.1 + 0.5)) / (3 * mean)
    checks["nrmse hand"] = (nrmse(sf(obs, point, lo, hi)), hand_nrmse)
    checks["nis hand"] = (nis(sf(obs, point, lo, hi)), hand_nis)
    worst = max(abs(a - b) for a, b in checks.values())
    elapsed = time.perf_counter() - t0
    verdict(5, worst <= 1e-12, f"{len(checks)} hand values, max gap {worst:.1e}", elapsed, 10)


def test_criterion_6_forest():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    X, y = rng.normal(size=(1000, 5)), rng.normal(size=1000)
    cfg = ForestConfig(n_trees=100, seed=3)
    a, b = fit_forest(X, y, cfg), fit_forest(X, y, cfg)
    same = a.to_text() == b.to_text() and predict_forest(a, X).tobytes() == predict_forest(b, X).tobytes()
    oob = oob_rmse(a, X, y)
    elapsed = time.perf_counter() - t0
    verdict(6, same and abs(oob - 1.0) <= 0.15, f"bit-identical: {same}, pure-noise OOB RMSE {oob:.3f} vs SD 1",
            elapsed, 120)


def test_criterion_7_coverage():
    t0 = time.perf_counter()
    panel, _ = simulate_panel(SimConfig(n_cantons=50, n_months=252), seed=0)
    spec = CantonSpec(train_end=panel.months[-4], methods=("gamlss",), horizon=3, n_boot=100, block=6)
    results = run_panel(panel, spec)
    covered, total, nis_g, nis_p = 0, 0, [], []
    for r in results:
        f = r.forecasts["gamlss"]
        obs = observed_risk(panel, r.fit.canton_id, f.months)
        covered += int(np.sum((f.lower <= obs) & (obs <= f.upper)))
        total += len(obs)
        if obs.mean() > 0:
            p = persistence_forecast(r.fit)
            nis_g.append(nis(ScoredForecast(obs, f.point, f.lower, f.upper)))
            nis_p.append(nis(ScoredForecast(obs, p.point, p.lower, p.upper)))
    cov = covered / total
    mg, mp = float(np.median(nis_g)), float(np.median(nis_p))
    elapsed = time.perf_counter() - t0
    verdict(7, cov >= 0.85 and mg < mp,
            f"coverage {cov:.3f} over {total} horizon-months, median NIS gamlss {mg:.3f} vs persistence {mp:.3f}",
            elapsed, 600)


def test_criterion_8_reproducible(tmp_path):
    t0 = time.perf_counter()
    sim = tmp_path / "sim"
    assert main(["simulate", "--seed", "8", "--cantons", "32", "--months", "252", "--out", str(sim)]) == 0
    base = (sim / "lagcast.cfg").read_text() + "forest.trees = 10\nbootstrap.replicates = 20\n"
    reports = []
    for run in ("one", "two"):
        cfg = sim / f"{run}.cfg"
        cfg.write_text(base.replace("output = run", f"output = {run}"))
        for cmd in ("fit", "forecast", "evaluate", "report"):
            assert main([cmd, str(cfg)]) == 0, (run, cmd)
        d = sim / run / "report"
        reports.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    scores = reports[0]["scores.csv"].decode().splitlines()[1:]
    well_formed = len(scores) == 32 and all(s.rsplit(",", 1)[1] in ("gamlss", "rf") for s in scores)
    same = reports[0] == reports[1]
    elapsed = time.perf_counter() - t0
    verdict(8, same and well_formed and len(reports[0]) >= 7,
            f"{len(reports[0])} report CSVs byte-identical: {same}, {len(scores)} score rows", elapsed, 300)
