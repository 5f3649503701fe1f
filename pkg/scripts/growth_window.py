"""Scan the weight of the linear family f = eps1 y against the r = 2 window.

For each eps1 prints the growth class, both window margins, the coercivity
probe verdict and whether the solve converges.
"""
import argparse

import numpy as np

from emden_fowler.errors import ConvergenceError
from emden_fowler.fixtures import linear_family, periodic_instance
from emden_fowler.functional import Orientation, coercivity_probe, growth_verdict, make_context
from emden_fowler.solver import SolveConfig, minimize_action


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--eps", type=float, nargs="+",
                        default=[0.25, 0.5, 0.9, 1.1, 1.9, 2.5])
    args = parser.parse_args()

    u = np.zeros(3)
    print(f"{'eps1':>6} {'class':>10} {'margin':>8} {'corr.':>8} {'probe':>13} {'solve':>8}")
    for eps in args.eps:
        inst = periodic_instance(nonlinearity=linear_family(eps1=eps))
        v = growth_verdict(inst)
        ctx = make_context(inst, orientation=Orientation.MINIMIZE)
        probe = coercivity_probe(ctx, u).direction
        try:
            minimize_action(ctx, u, SolveConfig(max_iters=200, multistart_count=4))
            solved = "ok"
        except ConvergenceError:
            solved = "failed"
        print(f"{eps:>6.3g} {v.cls:>10} {v.margin:>8.3g} {v.corrected_margin:>8.3g} "
              f"{probe:>13} {solved:>8}")


if __name__ == "__main__":
    main()
