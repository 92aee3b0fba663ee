"""Phase diagram over (a1, beta) with optional eta estimates in the strip.

Writes CSV to stdout; pass --eta to resolve strip points numerically.
"""
import argparse
import sys

from hartree_min.cli import SWEEP_HEADER, sweep_rows
from hartree_min.config import RunConfig
from hartree_min.io import get_ground_state, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gs-grid", type=int, default=48)
    ap.add_argument("--a2", default="a1", help='"a1" or a fixed multiple of a*')
    ap.add_argument("--count", type=int, default=11)
    ap.add_argument("--eta", action="store_true")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    gs = get_ground_state(args.gs_grid, 32.0)
    cfg = RunConfig(sweep_a_count=args.count, sweep_beta_count=args.count, sweep_a2=args.a2,
                    eta=args.eta, eta_trials=20, jobs=args.jobs)
    write_csv(sys.stdout, SWEEP_HEADER, sweep_rows(cfg, gs.a_star, gs))


if __name__ == "__main__":
    main()
