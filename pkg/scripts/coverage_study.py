"""Interval coverage and interval score on synthetic cantons.

    python scripts/coverage_study.py --cantons 50 --replicates 100 --seed 0

Fits every canton on all but the last ``horizon`` months, forecasts them with
block-bootstrap intervals and compares against the persistence baseline.
"""
import argparse
import time

import numpy as np

from lagcast.forest import ForestConfig
from lagcast.metrics import ScoredForecast, nis, nrmse
from lagcast.pipeline import CantonSpec, observed_risk, persistence_forecast, run_panel
from lagcast.simulate import SimConfig, simulate_panel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cantons", type=int, default=50)
    ap.add_argument("--months", type=int, default=252)
    ap.add_argument("--horizon", type=int, default=3)
    ap.add_argument("--replicates", type=int, default=100)
    ap.add_argument("--block", type=int, default=6)
    ap.add_argument("--methods", default="gamlss", help="comma list of gamlss, rf")
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    t0 = time.perf_counter()
    panel, _ = simulate_panel(SimConfig(n_cantons=args.cantons, n_months=args.months), seed=args.seed)
    methods = tuple(m.strip() for m in args.methods.split(","))
    spec = CantonSpec(train_end=panel.months[-1 - args.horizon], methods=methods, horizon=args.horizon,
                      n_boot=args.replicates, block=args.block, seed=args.seed,
                      forest=ForestConfig(n_trees=args.trees, seed=args.seed))
    results = run_panel(panel, spec, workers=args.workers)

    scores = {m: {"covered": 0, "n": 0, "nis": [], "nrmse": []} for m in (*methods, "persistence")}
    for r in results:
        forecasts = dict(r.forecasts, persistence=persistence_forecast(r.fit))
        obs = observed_risk(panel, r.fit.canton_id, forecasts["persistence"].months)
        for m, f in forecasts.items():
            s = scores[m]
            s["covered"] += int(np.sum((f.lower <= obs) & (obs <= f.upper)))
            s["n"] += len(obs)
            if obs.mean() > 0:
                sf = ScoredForecast(obs, f.point, f.lower, f.upper)
                s["nis"].append(nis(sf))
                s["nrmse"].append(nrmse(sf))

    print(f"{args.cantons} cantons, h={args.horizon}, B={args.replicates}, block={args.block}, seed={args.seed}")
    print(f"{'method':<12} {'coverage':>9} {'median NIS':>11} {'median NRMSE':>13}")
    for m, s in scores.items():
        print(f"{m:<12} {s['covered'] / s['n']:>9.3f} {np.median(s['nis']):>11.3f} {np.median(s['nrmse']):>13.3f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
