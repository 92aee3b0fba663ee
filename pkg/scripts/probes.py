"""Concentration and scaling probes across a range of couplings.

For each beta / beta_high the script prints the fitted slope of the energy
along the concentrating family next to the predicted value, and whether the
scaling family of a compact pair decreases without bound.
"""
import argparse

import numpy as np

from hartree_min.energy import Params, thresholds
from hartree_min.grid import make_grid
from hartree_min.io import get_ground_state
from hartree_min.minimizer import compact_pair, concentration_probe, expected_concentration_slope, scaling_probe
from hartree_min.potentials import PotentialSpec, build_potential, potential_function


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gs-grid", type=int, default=48)
    ap.add_argument("--a", type=float, default=0.5, help="a1 = a2 as a multiple of a*")
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 0.5, 0.9, 1.1, 1.5, 2.0])
    args = ap.parse_args()

    gs = get_ground_state(args.gs_grid, 32.0)
    A = gs.a_star
    grid = make_grid(48, 12.0)
    f = potential_function(PotentialSpec("harmonic"))
    V = build_potential(PotentialSpec("harmonic"), grid)
    u1, u2 = compact_pair(grid)
    a = args.a * A
    hi = thresholds(a, a, A).beta_high
    print("beta/beta_high,slope,predicted,concentration_unbounded,scaling_slope,scaling_unbounded")
    for b in args.betas:
        p = Params(a, a, b * hi)
        c = concentration_probe(gs, f, f, p, (0, 0, 0), np.geomspace(2, 20, 8), box_length=12.0)
        s = scaling_probe(u1, u2, V, V, p, np.geomspace(1, 12, 10))
        print(f"{b},{c.slope:.4f},{expected_concentration_slope(p, A):.4f},{c.unbounded_below},"
              f"{s.slope:.4f},{s.unbounded_below}")


if __name__ == "__main__":
    main()
