"""``hartree-min`` command line."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, apply_overrides, load_config

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NONCONVERGENCE = 3
EXIT_DIVERGED = 4
EXIT_INTERNAL = 5

SWEEP_HEADER = ["a1", "a2", "beta", "verdict", "rule", "beta_low", "beta_high",
                "eta_lower", "eta_upper", "eta_estimate", "energy", "error"]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--grid", type=int, dest="n", help="grid points per axis for the run")
    common.add_argument("--box", type=float, help="box length for the run")
    common.add_argument("--gs-grid", type=int, dest="gs_n", help="grid points per axis for Q")
    common.add_argument("--gs-box", type=float, dest="gs_box", help="box length for Q")
    common.add_argument("--a1", type=float)
    common.add_argument("--a2", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--beta-unit", dest="beta_unit", choices=("beta_low", "beta_high", "a_star", "abs"))
    common.add_argument("--a-unit", dest="a_unit", choices=("a_star", "abs"))
    common.add_argument("--m", type=float)
    common.add_argument("--jobs", type=int)
    common.add_argument("--output", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hartree-min", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ground-state", parents=[common], help="solve for Q and a*, using the cache")
    sub.add_parser("minimize", parents=[common], help="minimize the coupled energy")
    c = sub.add_parser("classify", parents=[common], help="print the existence verdict")
    c.add_argument("--eta", action="store_true", help="also estimate eta numerically")
    sub.add_parser("sweep", parents=[common], help="phase diagram as CSV")
    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--only", action="append", help="check family or id (repeatable)")
    v.add_argument("--inject", help=argparse.SUPPRESS)
    return p


def _resolve(args) -> RunConfig:
    try:
        cfg = load_config(args.config)
        keys = ("n", "box", "gs_n", "gs_box", "a1", "a2", "beta", "beta_unit", "a_unit", "m", "jobs", "output")
        over = {k: getattr(args, k, None) for k in keys}
        if args.command == "ground-state":
            # for this command --grid/--box describe Q's grid
            over["gs_n"] = over.pop("n") or over["gs_n"]
            over["gs_box"] = over.pop("box") or over["gs_box"]
        return apply_overrides(cfg, over)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_PRECONDITION, f"configuration error: {exc}") from exc


def _ground_state(cfg: RunConfig):
    from .ground_state import ConvergenceError
    from .io import get_ground_state

    try:
        return get_ground_state(cfg.gs_n, cfg.gs_box)
    except ConvergenceError as exc:
        raise CliError(EXIT_NONCONVERGENCE, f"ground state did not converge: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_PRECONDITION, f"precondition failed: {exc}") from exc


def _print_record(items: dict, header: str | None = None) -> None:
    from .io import RECORD_HEADER, format_record

    sys.stdout.write(format_record(items, header or RECORD_HEADER))


def _echo(cfg: RunConfig) -> None:
    sys.stdout.write("# resolved config\n")
    for line in cfg.to_text().splitlines():
        sys.stdout.write(f"# {line}\n")


def cmd_ground_state(cfg: RunConfig) -> int:
    from .io import cache_path

    gs = _ground_state(cfg)
    _echo(cfg)
    _print_record({
        "n": cfg.gs_n,
        "box": cfg.gs_box,
        "a_star": gs.a_star,
        "weinstein_min": gs.weinstein_min,
        "pohozaev_residual": gs.pohozaev_residual,
        "el_residual": gs.el_residual,
        "decay_constant": gs.decay_constant,
        "cache": str(cache_path(cfg.gs_n, cfg.gs_box)),
    })
    return EXIT_OK


def _potentials(cfg: RunConfig, p, a_star: float):
    from .grid import make_grid
    from .potentials import build_potential

    grid = make_grid(cfg.n, cfg.box)
    ctx = cfg.well_context(p, a_star)
    return grid, build_potential(cfg.potential_spec(1), grid, ctx), build_potential(cfg.potential_spec(2), grid, ctx)


def cmd_minimize(cfg: RunConfig) -> int:
    from .io import result_scalars, save_result
    from .minimizer import minimize

    gs = _ground_state(cfg)
    try:
        p = cfg.params(gs.a_star)
        grid, V1, V2 = _potentials(cfg, p, gs.a_star)
    except ValueError as exc:
        raise CliError(EXIT_PRECONDITION, f"precondition failed: {exc}") from exc
    res = minimize(V1, V2, p, grid, cfg.options(gs.a_star))
    out = Path(cfg.output)
    save_result(res, out / "result.bin", cfg.to_text())
    _echo(cfg)
    _print_record({"a_star": gs.a_star, "a1": p.a1, "a2": p.a2, "beta": p.beta, **result_scalars(res)})
    if res.warning:
        print(f"warning: {res.warning}", file=sys.stderr)
    if res.diverged:
        print(f"energy diverged ({res.reason}); this signals nonexistence. "
              "Run the scaling or concentration probe to confirm unboundedness.", file=sys.stderr)
        return EXIT_DIVERGED
    if not res.converged:
        print(f"not converged: {res.reason}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_classify(cfg: RunConfig, with_eta: bool = False) -> int:
    from .energy import EtaEstimateError, classify, estimate_eta, thresholds

    gs = _ground_state(cfg)
    try:
        p = cfg.params(gs.a_star)
    except ValueError as exc:
        raise CliError(EXIT_PRECONDITION, f"precondition failed: {exc}") from exc
    eta = None
    if with_eta or cfg.eta:
        try:
            eta = estimate_eta(p, gs, trials=cfg.eta_trials)
        except EtaEstimateError as exc:
            raise CliError(EXIT_INTERNAL, str(exc)) from exc
    v = classify(p, thresholds(p.a1, p.a2, gs.a_star), eta)
    _echo(cfg)
    _print_record(v.record())
    return EXIT_OK


def sweep_rows(cfg: RunConfig, a_star: float, gs=None) -> list[list]:
    """One row per (a1, beta); rows are independent and returned in grid order."""
    from .energy import Params, classify, estimate_eta, thresholds

    a_fracs = np.linspace(cfg.sweep_a_min, cfg.sweep_a_max, cfg.sweep_a_count)
    b_vals = np.linspace(cfg.sweep_beta_min, cfg.sweep_beta_max, cfg.sweep_beta_count)
    points = [(float(af), float(bv)) for af in a_fracs for bv in b_vals]

    def row(point):
        af, bv = point
        a1 = af * a_star
        a2 = a1 if cfg.sweep_a2 == "a1" else float(cfg.sweep_a2) * a_star
        t = thresholds(a1, a2, a_star)
        try:
            unit = {"abs": 1.0, "a_star": a_star, "beta_high": t.beta_high, "beta_low": t.beta_low}[cfg.sweep_beta_unit]
            if unit is None:
                raise ValueError("beta_low undefined at this point")
            p = Params(a1, a2, bv * unit, cfg.m)
            eta = estimate_eta(p, gs, trials=cfg.eta_trials) if (cfg.eta and gs is not None) else None
            v = classify(p, t, eta).record()
            return [a1, a2, p.beta, v["verdict"], v["rule"], v["beta_low"], v["beta_high"],
                    v["eta_lower"], v["eta_upper"], v["eta_estimate"], None, ""]
        except Exception as exc:  # recorded per row, the sweep goes on
            return [a1, a2, None, "error", "", t.beta_low, t.beta_high, None, None, None, None,
                    f"{type(exc).__name__}: {exc}"]

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(row, points))


def cmd_sweep(cfg: RunConfig) -> int:
    from .io import write_csv

    gs = _ground_state(cfg)
    rows = sweep_rows(cfg, gs.a_star, gs)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        write_csv(fh, SWEEP_HEADER, rows)
    write_csv(sys.stdout, SWEEP_HEADER, rows)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, only=None, fault=None) -> int:
    from .verify import Context, run_checks

    ctx = Context(gs_n=cfg.gs_n, gs_box=cfg.gs_box, run_n=cfg.n, run_box=cfg.box)
    t0 = time.perf_counter()
    try:
        results = run_checks(ctx, only, fault)
    except ValueError as exc:
        raise CliError(EXIT_PRECONDITION, str(exc)) from exc
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.id} ({r.seconds:.1f}s): {r.detail}")
    failed = [r.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if not failed else EXIT_INTERNAL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.command == "ground-state":
            return cmd_ground_state(cfg)
        if args.command == "minimize":
            return cmd_minimize(cfg)
        if args.command == "classify":
            return cmd_classify(cfg, args.eta)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_verify(cfg, args.only, args.inject)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
