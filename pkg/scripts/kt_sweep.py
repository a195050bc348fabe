"""Ratio of the achieved restricted norm to the guaranteed bound, across lambda and eta.

    python scripts/kt_sweep.py --rows 12 --cols 48 --trials 100
"""
import argparse

import numpy as np

from resinv.barrier import kt_select


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=12)
    ap.add_argument("--cols", type=int, default=48)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.1, 0.25, 0.5, 0.75])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    mats = [rng.standard_normal((args.rows, args.cols)) for _ in range(args.trials)]
    print(f"{'lambda':>7} {'eta':>6} {'|sigma|':>8} {'mean ratio':>11} {'max ratio':>10} {'warnings':>9}")
    for lam in args.lambdas:
        for eta in sorted({lam, 0.9}):
            ratios, warns = [], 0
            for U in mats:
                cert = kt_select(U, lam, eta)
                ratios.append(cert.achieved / cert.claimed_bound)
                warns += bool(cert.warnings)
            print(f"{lam:>7.2f} {eta:>6.2f} {len(cert.sigma):>8} {np.mean(ratios):>11.4f} {max(ratios):>10.4f} {warns:>9}")


if __name__ == "__main__":
    main()
