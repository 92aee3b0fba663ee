"""Border case a1 = a2 = a* - beta with double-well potentials.

Prints the converged energy against c_zeta and min(V1 + V2) for several beta.
"""
import argparse

from hartree_min.energy import Params
from hartree_min.grid import make_grid
from hartree_min.io import get_ground_state
from hartree_min.minimizer import minimize
from hartree_min.potentials import PotentialSpec, WellContext, build_pair, c_zeta


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gs-grid", type=int, default=48)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.3, 0.5, 0.7], help="multiples of a*")
    ap.add_argument("--grid", type=int, default=48)
    ap.add_argument("--box", type=float, default=16.0)
    args = ap.parse_args()

    A = get_ground_state(args.gs_grid, 32.0).a_star
    g = make_grid(args.grid, args.box)
    print("beta/a*,energy,c_zeta,min_V1_plus_V2,converged,iterations")
    for bf in args.betas:
        beta = bf * A
        ctx = WellContext(A, beta)
        s1, s2 = PotentialSpec("double_well", which=1), PotentialSpec("double_well", which=2)
        pair = build_pair(s1, s2, g, ctx)
        res = minimize(pair.V1, pair.V2, Params(A - beta, A - beta, beta), g)
        cz = c_zeta(g, s1.x1, s1.x2, ctx)
        floor = float((pair.V1.values + pair.V2.values).min())
        print(f"{bf},{res.energy:.6f},{cz:.6f},{floor:.6f},{res.converged},{res.iterations}")


if __name__ == "__main__":
    main()
