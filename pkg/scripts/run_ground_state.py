"""Solve for Q on one or more grids and print a*, the identity defects and timings."""
import argparse
import time

from hartree_min.grid import make_grid
from hartree_min.ground_state import check_decay, decay_profile, solve_scalar_ground_state
from hartree_min.io import cache_path, save_ground_state
from hartree_min.operators import hartree_energy, quarter_laplacian_energy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[48, 64])
    ap.add_argument("--box", type=float, default=32.0)
    ap.add_argument("--save", action="store_true", help="store results in the ground-state cache")
    args = ap.parse_args()

    print("n,box,a_star,T/M-1,D/2M-1,el_residual,decay_constant,decay_spread,seconds")
    for n in args.grids:
        t0 = time.perf_counter()
        gs = solve_scalar_ground_state(make_grid(n, args.box))
        dt = time.perf_counter() - t0
        t, m, d = quarter_laplacian_energy(gs.q), gs.q.mass(), hartree_energy(gs.q, gs.q)
        prof = decay_profile(gs.q)
        spread = (prof.max() - prof.min()) / prof.max()
        c_q, _ = check_decay(gs)
        print(f"{n},{args.box},{gs.a_star:.10f},{t / m - 1:.2e},{d / (2 * m) - 1:.2e},"
              f"{gs.el_residual:.2e},{c_q:.4f},{spread:.3f},{dt:.1f}")
        if args.save:
            save_ground_state(gs, cache_path(n, args.box))


if __name__ == "__main__":
    main()
