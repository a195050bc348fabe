"""Certified distance-to-the-cube bounds on random symmetric polytopes.

Prints, per dimension, the worst certificate 1/c_low over a batch of bodies at the
default eps and at the optimized eps, next to (2n)^(5/6).

    python scripts/cube_distance_table.py --dims 4 8 16 32 --bodies 10 --seed 0
"""
import argparse

import numpy as np

from resinv.factorize import cube_basis, optimize_eps
from resinv.john import PointSet, john_decomposition


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--bodies", type=int, default=10)
    ap.add_argument("--points-per-dim", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>4} {'eps':>8} {'eps_opt':>8} {'k':>5} {'1/c_low':>10} {'opt 1/c_low':>12} {'(2n)^5/6':>10}")
    for n in args.dims:
        e_opt = optimize_eps(n)
        worst_default, worst_opt, ks = 0.0, 0.0, []
        for _ in range(args.bodies):
            d = john_decomposition(PointSet(rng.standard_normal((n, args.points_per_dim * n))))
            res = cube_basis(d)
            ks.append(res.k)
            worst_default = max(worst_default, res.distance_certificate)
            worst_opt = max(worst_opt, cube_basis(d, eps=e_opt).distance_certificate)
        print(
            f"{n:>4} {res.epsilon:>8.4f} {e_opt:>8.4f} {min(ks):>5} "
            f"{worst_default:>10.3f} {worst_opt:>12.3f} {(2 * n) ** (5 / 6):>10.3f}"
        )


if __name__ == "__main__":
    main()
