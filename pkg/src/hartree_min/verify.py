"""Invariant checks run by ``hartree-min verify``.

Each check has an id and a family; ``--only`` selects families or ids.
"""
from __future__ import annotations

import contextlib
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import operators
from .grid import Field, gaussian, make_grid, sample
from .operators import KineticSpec, apply_kinetic, coulomb_potential, hartree_energy


@dataclass
class CheckResult:
    id: str
    family: str
    passed: bool
    detail: str
    seconds: float


@dataclass
class Context:
    gs_n: int = 48
    gs_box: float = 32.0
    run_n: int = 48
    run_box: float = 12.0
    cache_root: object = None
    _gs: dict = field(default_factory=dict)

    def ground_state(self, n: int | None = None):
        from .io import get_ground_state

        n = n or self.gs_n
        if n not in self._gs:
            self._gs[n] = get_ground_state(n, self.gs_box, self.cache_root)
        return self._gs[n]


CHECKS: list[tuple[str, str, Callable]] = []


def check(id: str, family: str):
    def deco(fn):
        CHECKS.append((id, family, fn))
        return fn

    return deco


@check("kinetic.plane-wave", "kinetic")
def _plane_wave(ctx: Context):
    g = make_grid(ctx.run_n, ctx.run_box)
    xi = np.array([2, -3, 1]) / g.box_length
    worst = 0.0
    for m in (0.0, 1.3):
        u = sample(lambda X, Y, Z: np.cos(2 * np.pi * (xi[0] * X + xi[1] * Y + xi[2] * Z)), g)
        lam = math.sqrt((2 * math.pi * np.linalg.norm(xi)) ** 2 + m * m)
        ku = apply_kinetic(u, KineticSpec(m))
        worst = max(worst, float(np.max(np.abs(ku.values - lam * u.values))) / lam)
    return worst < 1e-12, f"max relative deviation {worst:.2e}"


@check("coulomb.gaussian", "coulomb")
def _gaussian_charge(ctx: Context):
    g = make_grid(64, 16.0)
    u = gaussian(g, 1.0)
    phi0 = coulomb_potential(u).values[g.origin_index()]
    d = hartree_energy(u, u)
    e1 = abs(phi0 - 2 / math.sqrt(math.pi)) / (2 / math.sqrt(math.pi))
    e2 = abs(d - math.sqrt(2 / math.pi)) / math.sqrt(2 / math.pi)
    return max(e1, e2) < 1e-2, f"phi(0) error {e1:.2e}, self-energy error {e2:.2e}"


@check("gs.identities", "gs")
def _gs_identities(ctx: Context):
    from .operators import quarter_laplacian_energy

    gs = ctx.ground_state()
    t, mass, d = quarter_laplacian_energy(gs.q), gs.q.mass(), hartree_energy(gs.q, gs.q)
    worst = max(abs(t - mass) / mass, abs(t - d / 2) / t, abs(mass - d / 2) / mass)
    ok = worst < 1e-3 and gs.el_residual < 1e-3
    return ok, f"a*={gs.a_star:.6f}, identity defect {worst:.1e}, EL residual {gs.el_residual:.1e}"


@check("gs.symmetry", "gs")
def _gs_symmetry(ctx: Context):
    from .ground_state import cube_symmetry_defect

    gs = ctx.ground_state()
    d = cube_symmetry_defect(gs.q)
    nonneg = float(gs.q.values.min()) >= -1e-8 * float(gs.q.values.max())
    return d < 1e-6 and nonneg, f"asymmetry {d:.1e}, min sample {gs.q.values.min():.2e}"


@check("gn.sharpness", "gn")
def _gn_sharp(ctx: Context):
    from .ground_state import weinstein_quotient

    gs = ctx.ground_state()
    w = weinstein_quotient(gs.q)
    err = abs(w - gs.a_star / 2) / (gs.a_star / 2)
    trials = random_smooth_fields(gs.q.grid, 20, seed=7)
    worst = min(weinstein_quotient(u) for u in trials) / (gs.a_star / 2)
    return err < 1e-3 and worst >= 1 - 1e-6, f"W(Q) error {err:.1e}, min trial ratio {worst:.4f}"


def random_smooth_fields(grid, count: int, seed: int = 0) -> list[Field]:
    """Sums of 1 to 3 Gaussians with widths in [0.8, 2] and centers within 2 of the origin."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = np.zeros(grid.shape)
        for _ in range(rng.integers(1, 4)):
            c = rng.uniform(-2, 2, 3)
            v += rng.uniform(0.3, 1.0) * gaussian(grid, rng.uniform(0.8, 2.0), tuple(c), mass=None).values
        out.append(Field(grid, v))
    return out


@check("eta.forced", "eta")
def _eta(ctx: Context):
    from .energy import Params, estimate_eta, thresholds

    gs = ctx.ground_state()
    a = gs.a_star
    e1 = estimate_eta(Params(0.5 * a, 0.5 * a, 0.0), gs)
    e2 = estimate_eta(Params(0.4 * a, 0.4 * a, 0.6 * a), gs)
    low = thresholds(0.3 * a, 0.6 * a, a).beta_low
    e3 = estimate_eta(Params(0.3 * a, 0.6 * a, low), gs)
    ok = abs(e1 - 2) < 0.04 and abs(e2 - 1) < 0.02 and e3 > 1
    return ok, f"eta: {e1:.4f} (2), {e2:.4f} (1), {e3:.4f} (>1)"


@check("appendix.oracles", "appendix")
def _appendix(ctx: Context):
    from .appendix import closed_form_coupled_gs, coupled_action, h_quotient, nehari_residual
    from .minimizer import pohozaev_coupled_residual

    gs = ctx.ground_state()
    a_star = gs.a_star
    a, b = 0.4 * a_star, 0.6 * a_star
    c = closed_form_coupled_gs(a, b, gs)
    r = max(nehari_residual(c.u0, c.v0, a, b))
    pz = pohozaev_coupled_residual(c.u0, c.v0, a, b)
    act = coupled_action(c.u0, c.v0, a, b)
    act_err = abs(act - c.action) / c.action
    acts = [coupled_action(x.u0, x.v0, a, a) for x in
            (closed_form_coupled_gs(a, a, gs, th) for th in (0.3, 1.0, 2.0, 4.0))]
    spread = (max(acts) - min(acts)) / abs(acts[0])
    h = h_quotient(gs.q, gs.q, a)
    h_err = abs(h - a_star / (2 * a)) / (a_star / (2 * a))
    ok = r < 1e-3 and pz < 1e-3 and act_err < 1e-3 and spread < 1e-10 and h_err < 1e-3
    return ok, f"nehari {r:.1e}, pohozaev {pz:.1e}, action {act_err:.1e}, theta spread {spread:.1e}, h {h_err:.1e}"


@check("classify.partition", "classify")
def _classify(ctx: Context):
    from .energy import Outcome, Params, classify, thresholds

    a = ctx.ground_state().a_star
    bad = 0
    for af in np.linspace(0.1, 1.5, 11):
        for bf in np.linspace(-0.5, 1.5, 11):
            p = Params(af * a, af * a, bf * a)
            t = thresholds(p.a1, p.a2, a)
            v = classify(p, t).outcome
            if af * a > a or p.beta > t.beta_high:
                want = {Outcome.NONE}
            elif p.beta < t.beta_low:
                want = {Outcome.EXISTS}
            else:
                want = {Outcome.INDETERMINATE, Outcome.STRIP_EXISTS}
            bad += v not in want
    return bad == 0, f"{bad} misclassified of 121"


@check("minimize.harmonic", "minimize")
def _minimize(ctx: Context):
    from .energy import Params, thresholds
    from .minimizer import minimize
    from .potentials import PotentialSpec, build_potential

    a = ctx.ground_state().a_star
    g = make_grid(ctx.run_n, ctx.run_box)
    V = build_potential(PotentialSpec("harmonic"), g)
    p = Params(0.5 * a, 0.5 * a, 0.5 * thresholds(0.5 * a, 0.5 * a, a).beta_low)
    r = minimize(V, V, p, g)
    e = [t[0] for t in r.trace]
    mono = all(y <= x for x, y in zip(e, e[1:]))
    mass = max(abs(u.mass() - 1) for u in r.fields)
    ok = r.converged and mono and mass < 1e-10 and max(r.el_residual1, r.el_residual2) < 1e-4
    return ok, f"{r.reason} in {r.iterations} steps, E={r.energy:.8f}"


@check("probe.concentration", "probe")
def _probe(ctx: Context):
    from .energy import Params, thresholds
    from .minimizer import concentration_probe, expected_concentration_slope
    from .potentials import PotentialSpec, potential_function

    gs = ctx.ground_state()
    a = gs.a_star
    p = Params(0.5 * a, 0.5 * a, 1.5 * thresholds(0.5 * a, 0.5 * a, a).beta_high)
    f = potential_function(PotentialSpec("harmonic"))
    rep = concentration_probe(gs, f, f, p, (0.0, 0.0, 0.0), np.geomspace(2, 20, 8), box_length=ctx.run_box)
    want = expected_concentration_slope(p, a)
    ok = abs(rep.slope - want) <= 0.1 * abs(want) and rep.slope < 0 and rep.unbounded_below
    return ok, f"slope {rep.slope:.4f} vs {want:.4f}"


@contextlib.contextmanager
def injected(fault: str | None):
    """Deliberate faults for exercising the suite."""
    if fault is None:
        yield
        return
    if fault != "coulomb-zero-mode":
        raise ValueError(f"unknown fault {fault!r}")
    original = operators._coulomb_kernel_hat

    def broken(grid, cutoff):
        kh = np.array(original(grid, cutoff))
        kh[0, 0, 0] = 0.0
        return kh

    operators._coulomb_kernel_hat = broken
    try:
        yield
    finally:
        operators._coulomb_kernel_hat = original


def run_checks(ctx: Context, only: list[str] | None = None, fault: str | None = None) -> list[CheckResult]:
    selected = [c for c in CHECKS if not only or c[0] in only or c[1] in only]
    if only and not selected:
        raise ValueError(f"no checks match {only}")
    results = []
    with injected(fault):
        for cid, fam, fn in selected:
            t0 = time.perf_counter()
            try:
                ok, detail = fn(ctx)
            except Exception as exc:  # a crashing check is a failing check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(cid, fam, bool(ok), detail, time.perf_counter() - t0))
    return results
