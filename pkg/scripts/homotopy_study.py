"""Track minimizers along u_n = u_bar + v / n and print the convergence table.

    python scripts/homotopy_study.py --boundary periodic --N 64
"""
import argparse

import numpy as np

from emden_fowler.dependence import AffineHomotopy, run_study
from emden_fowler.fixtures import mixed_instance, periodic_instance, sublinear_family
from emden_fowler.functional import make_context
from emden_fowler.solver import SolveConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--boundary", choices=["periodic", "mixed"], default="periodic")
    parser.add_argument("--N", type=int, default=64)
    parser.add_argument("--v", type=float, default=1.0, help="constant direction of the homotopy")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    make = periodic_instance if args.boundary == "periodic" else mixed_instance
    inst = make(nonlinearity=sublinear_family())
    ctx = make_context(inst)
    seq = AffineHomotopy(np.zeros(3), np.full(3, args.v), inst.M)
    rep = run_study(ctx, seq, args.N, SolveConfig(seed=args.seed))

    print(f"orientation {rep.orientation}, status {rep.status}")
    print(f"x_bar = {rep.x_bar}, uniform bound c = {rep.uniform_bound_c:.6g}, alpha = {rep.alpha}")
    print(f"coercivity fit a R^mu + b: a={rep.coercivity_fit[0]:.4g} "
          f"mu={rep.coercivity_fit[1]:.4g} b={rep.coercivity_fit[2]:.4g}")
    print(f"derivative bound on the orbit: {rep.gateaux_bound:.6g}")
    print(f"{'n':>4} {'|u_n-u|':>10} {'|x_n-x|':>12} {'ratio':>8} {'n|x_n-x|':>9}")
    for n, du, dx, ratio, _, _ in rep.convergence_rate_table[-8:]:
        print(f"{n:>4} {du:>10.4g} {dx:>12.4e} {ratio:>8.4f} {n * dx:>9.4f}")


if __name__ == "__main__":
    main()
