"""How often BIC recovers the order of a simulated VAR(p).

    python scripts/var_order_recovery.py --order 2 --reps 50
"""
import argparse

import numpy as np

from lagcast.var import select_lag_bic


def simulate(coefs, T, rng, burn=200):
    p, k, _ = coefs.shape
    y = np.zeros((T + burn, k))
    for t in range(p, T + burn):
        y[t] = sum(coefs[i] @ y[t - i - 1] for i in range(p)) + rng.normal(size=k)
    return y[burn:]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, default=2)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--T", type=int, default=252)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--last-lag", type=float, default=0.45, help="diagonal weight on the last lag")
    ap.add_argument("--p-max", type=int, default=13)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    coefs = np.zeros((args.order, args.k, args.k))
    for i in range(args.order - 1):
        coefs[i] = 0.3 / args.order * np.eye(args.k)
    coefs[-1] = args.last_lag * np.eye(args.k)
    rng = np.random.default_rng(args.seed)
    months = [(t % 12) + 1 for t in range(args.T)]
    picks = [select_lag_bic(simulate(coefs, args.T, rng), args.p_max, months) for _ in range(args.reps)]
    counts = np.bincount(picks, minlength=args.p_max + 1)
    print(f"true order {args.order}, k={args.k}, T={args.T}, {args.reps} replications")
    for p in range(1, args.p_max + 1):
        if counts[p]:
            print(f"  p={p:<3d} {counts[p]:4d}")
    print(f"recovered {counts[args.order] / args.reps:.0%}")


if __name__ == "__main__":
    main()
