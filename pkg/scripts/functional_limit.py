"""KS distance between replicas of S_n(1) and draws of the limit V(1).

For alpha < 1 the limit is the uncompensated decorated stable law; for
1 < alpha < 2 the compensated version with truncation epsilon is used.

Usage: python3 scripts/functional_limit.py --alpha 0.5 --n 10000 --replicas 2000
"""
import argparse

import numpy as np
from scipy import stats

from cantor_extremes.estimators import simulate_observable_stream
from cantor_extremes.limit_process import V_terminal_samples, ks_distance, partial_sum_terminal, simulate_V_compensated
from cantor_extremes.map_core import TERNARY
from cantor_extremes.observable import default_scales
from cantor_extremes.seeding import derive_seed, run_replicas


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=10**4)
    ap.add_argument("--replicas", type=int, default=2000)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    theta = float(TERNARY.theta)
    sc = default_scales(args.n, 1, args.alpha)
    S = np.array(run_replicas(lambda i, s: partial_sum_terminal(simulate_observable_stream(TERNARY, sc, s, sc.n).log_x, sc),
                              args.seed, args.replicas, args.workers))
    if args.alpha < 1:
        V = V_terminal_samples(theta, args.alpha, args.replicas, derive_seed(args.seed, 10**6))
    else:
        V = np.array([simulate_V_compensated(theta, args.alpha, 1.0, args.epsilon, derive_seed(args.seed, 10**6 + i)).path.terminal
                      for i in range(args.replicas)])
    ks = ks_distance(S, V)
    print(f"alpha={args.alpha} n={args.n} replicas={args.replicas}")
    print(f"KS = {ks:.4f}  (scipy p-value {stats.ks_2samp(S, V).pvalue:.3g})")
    for q in (0.1, 0.5, 0.9):
        print(f"  quantile {q}: S_n(1) {np.quantile(S, q):10.4f}   V(1) {np.quantile(V, q):10.4f}")


if __name__ == "__main__":
    main()
