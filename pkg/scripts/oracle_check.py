"""Compare the multistart minimum with the brute-force grid over several boxes.

    python scripts/oracle_check.py --steps 41 81 161
"""
import argparse

import numpy as np

from emden_fowler.fixtures import periodic_instance, sublinear_family
from emden_fowler.functional import coercivity_radius, make_context
from emden_fowler.solver import brute_force_oracle, minimize_action


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--u", type=float, default=1.0)
    parser.add_argument("--steps", type=int, nargs="+", default=[41, 81, 161])
    parser.add_argument("--boxes", type=float, nargs="*", default=[2.0, 3.0],
                        help="extra half-widths besides the coercivity radius")
    args = parser.parse_args()

    u = np.full(3, args.u)
    ctx = make_context(periodic_instance(nonlinearity=sublinear_family()), u)
    rep = minimize_action(ctx, u)
    radius = coercivity_radius(ctx, u)
    print(f"solver J* = {rep.J_star:.12f} at x* = {rep.x_star}")
    print(f"coercivity radius = {radius:.4f}")
    print(f"{'box':>8} {'steps':>6} {'step':>8} {'J_grid - J*':>12}")
    for box in [radius, *args.boxes]:
        for steps in args.steps:
            orc = brute_force_oracle(ctx, u, box, steps)
            print(f"{box:>8.4f} {steps:>6} {orc.step:>8.4f} {orc.value - rep.J_star:>12.3e}")


if __name__ == "__main__":
    main()
