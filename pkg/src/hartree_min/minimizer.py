"""Constrained minimization of the coupled energy on two unit L2 spheres, and the
two families that expose unboundedness from below."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .energy import Outcome, Params, classify, thresholds, total_energy
from .grid import Field, Grid3, _same_grid, fft, gaussian, ifft_real, sample
from .operators import _potential, hartree_matrix, kinetic_multiplier

log = logging.getLogger(__name__)

ARMIJO = 1e-4
# a fitted slope counts as unbounded only below this fraction of the kinetic slope
SLOPE_TOL = 1e-2


@dataclass(frozen=True)
class MinimizerOptions:
    tol_e: float = 1e-10
    tol_r: float = 1e-4
    max_iter: int = 5000
    energy_floor: float = -1e6
    step0: float = 0.1
    max_step: float = 10.0
    # spectral mass beyond 2/3 of the Nyquist radius that counts as collapse
    collapse_fraction: float = 1e-2
    width: float | None = None
    centers: tuple | None = None
    a_star: float | None = None
    # "kinetic": (1 + |k|)^-1 alone; "combined" also damps by (alpha + V)^-1/2 on both sides
    preconditioner: str = "combined"
    alpha: float = 1.0


@dataclass(frozen=True, eq=False)
class MinimizerResult:
    u1: Field
    u2: Field | None
    energy: float
    mu1: float
    mu2: float | None
    el_residual1: float
    el_residual2: float | None
    trace: list = field(repr=False)
    converged: bool
    diverged: bool = False
    reason: str = ""
    iterations: int = 0
    min_sample: float = 0.0
    warning: str | None = None

    @property
    def fields(self) -> tuple[Field, ...]:
        return (self.u1,) if self.u2 is None else (self.u1, self.u2)


@dataclass(frozen=True)
class ProbeReport:
    parameters: tuple
    energies: tuple
    slope: float
    unbounded_below: bool
    label: str = ""
    intercept: float = float("nan")

    def __post_init__(self):
        if not all(math.isfinite(e) for e in self.energies):
            raise ValueError("probe energies must be finite")
        if any(b <= a for a, b in zip(self.parameters, self.parameters[1:])):
            raise ValueError("probe parameters must be strictly increasing")

    def csv_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.parameters, self.energies))


# the flow ------------------------------------------------------------------------

class _System:
    """Arrays and coefficients for one or two components."""

    def __init__(self, grid: Grid3, V: Sequence[np.ndarray], a: Sequence[float], beta: float, m: float,
                 preconditioner: str = "kinetic", alpha: float = 1.0):
        self.grid = grid
        self.dv = grid.cell_volume
        self.V = [np.asarray(v) for v in V]
        self.a = list(a)
        self.beta = beta
        self.mult = kinetic_multiplier(grid, m)
        k = np.broadcast_to(kinetic_multiplier(grid, 0.0), grid.shape)
        if preconditioner not in ("kinetic", "combined"):
            raise ValueError(f"unknown preconditioner {preconditioner!r}")
        self.combined = preconditioner == "combined"
        self.pre = 1.0 / (alpha + k) if self.combined else 1.0 / (1.0 + k)
        self.pv = [1.0 / np.sqrt(1.0 + v / alpha) for v in self.V]
        self.high = k > (2.0 / 3.0) * math.pi / grid.spacing

    def state(self, us):
        hats = [fft(u) for u in us]
        kus = [ifft_real(self.mult * h) for h in hats]
        phis = [_potential(u * u, self.grid) for u in us]
        dv = self.dv
        e = 0.0
        for u, ku, phi, V, a in zip(us, kus, phis, self.V, self.a):
            e += (float(np.vdot(u, ku)) + float(np.vdot(V, u * u)) - 0.5 * a * float(np.vdot(phi, u * u))) * dv
        if len(us) == 2:
            e -= self.beta * float(np.vdot(phis[0], us[1] ** 2)) * dv
        grads = []
        for i, u in enumerate(us):
            h = kus[i] + self.V[i] * u - self.a[i] * phis[i] * u
            if len(us) == 2:
                h = h - self.beta * phis[1 - i] * u
            grads.append(2.0 * h)
        high = max(
            float(np.sum(np.abs(h[self.high]) ** 2) / np.sum(np.abs(h) ** 2)) for h in hats
        )
        return e, grads, high

    def multipliers(self, us, grads):
        out = []
        for u, g in zip(us, grads):
            mu = 0.5 * float(np.vdot(u, g)) * self.dv
            r = 0.5 * g - mu * u
            out.append((mu, math.sqrt(float(np.vdot(r, r)) * self.dv)))
        return out

    def normalize(self, u):
        return u / math.sqrt(float(np.vdot(u, u)) * self.dv)

    def _apply(self, v, i):
        if self.combined:
            return self.pv[i] * ifft_real(self.pre * fft(self.pv[i] * v))
        return ifft_real(self.pre * fft(v))

    def direction(self, u, g, i):
        pg = self._apply(g, i)
        pu = self._apply(u, i)
        return pg - (float(np.vdot(u, pg)) / float(np.vdot(u, pu))) * pu


def _flow(system: _System, us, opts: MinimizerOptions):
    us = [system.normalize(u) for u in us]
    e, grads, high = system.state(us)
    step = opts.step0
    trace = []
    converged = diverged = False
    reason = ""
    it = 0
    for it in range(1, opts.max_iter + 1):
        dirs = [system.direction(u, g, i) for i, (u, g) in enumerate(zip(us, grads))]
        slope = -sum(float(np.vdot(g, d)) for g, d in zip(grads, dirs)) * system.dv
        if slope >= 0:
            reason = "no descent direction"
            break
        while True:
            trial = [system.normalize(u - step * d) for u, d in zip(us, dirs)]
            et, gt, ht = system.state(trial)
            if et <= e + ARMIJO * step * slope:
                break
            step *= 0.5
            if step < 1e-14:
                et = None
                break
        if et is None:
            reason = "line search stalled"
            break
        change = abs(e - et) / max(abs(et), 1e-300)
        us, e, grads, high = trial, et, gt, ht
        res = [r for _, r in system.multipliers(us, grads)]
        trace.append((e, step, max(res)))
        if e < opts.energy_floor:
            diverged, reason = True, f"energy below floor {opts.energy_floor:g}"
            break
        if high > opts.collapse_fraction:
            diverged, reason = True, f"resolution collapse (high-frequency mass {high:.2e})"
            break
        if change < opts.tol_e and max(res) < opts.tol_r:
            converged, reason = True, "converged"
            break
        step = min(2.0 * step, opts.max_step)
    else:
        reason = f"max_iter {opts.max_iter} reached"
    return us, e, grads, trace, converged, diverged, reason, it


def _argmin_center(V: Field) -> tuple[float, float, float]:
    X, Y, Z = V.grid.coordinates()
    sel = V.values <= V.values.min() + 1e-12 * max(1.0, float(np.max(V.values)))
    return (float(X[sel].mean()), float(Y[sel].mean()), float(Z[sel].mean()))


def _seed(V: Field, width: float | None, center=None) -> np.ndarray:
    g = V.grid
    c = _argmin_center(V) if center is None else center
    return gaussian(g, g.box_length / 8 if width is None else width, center=c).values


def _warning(p: Params, a_star: float | None) -> str | None:
    if a_star is None:
        return None
    v = classify(p, thresholds(p.a1, p.a2, a_star))
    if v.outcome is Outcome.EXISTS:
        return None
    return f"parameters classified {v.outcome.value} ({v.rule}); no minimizer is guaranteed"


def minimize(V1: Field, V2: Field, p: Params, grid: Grid3 | None = None,
             opts: MinimizerOptions = MinimizerOptions(), seeds=None) -> MinimizerResult:
    """Normalized gradient flow for the coupled energy at unit masses."""
    grid = _same_grid(V1, V2) if grid is None else grid
    _same_grid(V1, V2)
    if V1.grid != grid:
        raise ValueError("potentials live on a different grid")
    for V in (V1, V2):
        if np.min(V.values) < 0:
            raise ValueError("potentials must be nonnegative")
    centers = opts.centers or (None, None)
    if seeds is None:
        us = [_seed(V1, opts.width, centers[0]), _seed(V2, opts.width, centers[1])]
    else:
        us = [np.array(s.values if isinstance(s, Field) else s, dtype=float) for s in seeds]
    system = _System(grid, [V1.values, V2.values], [p.a1, p.a2], p.beta, p.m, opts.preconditioner, opts.alpha)
    us, e, grads, trace, conv, div, reason, it = _flow(system, us, opts)
    (mu1, r1), (mu2, r2) = system.multipliers(us, grads)
    u1, u2 = Field(grid, us[0]), Field(grid, us[1])
    if not div:
        e = total_energy(u1, u2, V1, V2, p)
    log.info("minimize %s: %s after %d iterations, E=%.10g", p, reason, it, e)
    return MinimizerResult(
        u1, u2, e, mu1, mu2, r1, r2, trace, conv, div, reason, it,
        float(min(us[0].min(), us[1].min())), _warning(p, opts.a_star),
    )


def minimize_single(V: Field, a: float, m: float = 0.0,
                    opts: MinimizerOptions = MinimizerOptions(), seed=None) -> MinimizerResult:
    """The same flow for one component: kinetic + potential - (a/2) D(u, u)."""
    center = opts.centers[0] if opts.centers else None
    u = _seed(V, opts.width, center) if seed is None else np.array(getattr(seed, "values", seed), dtype=float)
    system = _System(V.grid, [V.values], [a], 0.0, m, opts.preconditioner, opts.alpha)
    us, e, grads, trace, conv, div, reason, it = _flow(system, [u], opts)
    ((mu, r),) = system.multipliers(us, grads)
    return MinimizerResult(Field(V.grid, us[0]), None, e, mu, None, r, None, trace, conv, div, reason, it,
                           float(us[0].min()))


def lagrange_multipliers(u1: Field, u2: Field, V1: Field, V2: Field, p: Params) -> tuple[float, float]:
    from .operators import KineticSpec, kinetic_energy, potential_energy

    for name, u in (("u1", u1), ("u2", u2)):
        if abs(u.mass() - 1.0) > 1e-8:
            raise ValueError(f"{name} must have unit mass")
    spec = KineticSpec(p.m)
    d11, d22, d12 = hartree_matrix(u1, u2)
    mu1 = kinetic_energy(u1, spec) + potential_energy(u1, V1) - p.a1 * d11 - p.beta * d12
    mu2 = kinetic_energy(u2, spec) + potential_energy(u2, V2) - p.a2 * d22 - p.beta * d12
    return mu1, mu2


def el_residuals(u1: Field, u2: Field, V1: Field, V2: Field, p: Params) -> tuple[float, float]:
    """||sqrt(-Delta+m^2) u_i + V_i u_i - mu_i u_i - a_i phi_i u_i - beta phi_j u_i||."""
    g = _same_grid(u1, u2, V1, V2)
    mu = lagrange_multipliers(u1, u2, V1, V2, p)
    mult = kinetic_multiplier(g, p.m)
    phis = [_potential(u.values**2, g) for u in (u1, u2)]
    out = []
    for i, (u, V, a) in enumerate(((u1, V1, p.a1), (u2, V2, p.a2))):
        r = (ifft_real(mult * fft(u.values)) + V.values * u.values - mu[i] * u.values
             - a * phis[i] * u.values - p.beta * phis[1 - i] * u.values)
        out.append(math.sqrt(float(np.vdot(r, r)) * g.cell_volume))
    return tuple(out)


def pohozaev_coupled_residual(u: Field, v: Field, a: float, beta: float) -> float:
    """Relative defect of T_u + T_v + 3/2 (M_u + M_v) = 5/4 (a D_uu + a D_vv + 2 beta D_uv)."""
    from .operators import quarter_laplacian_energy

    duu, dvv, duv = hartree_matrix(u, v)
    lhs = quarter_laplacian_energy(u) + quarter_laplacian_energy(v) + 1.5 * (u.mass() + v.mass())
    rhs = 1.25 * (a * duu + a * dvv + 2.0 * beta * duv)
    den = abs(lhs) + abs(rhs)
    return 0.0 if den == 0 else abs(lhs - rhs) / den


# probes --------------------------------------------------------------------------

def _fit_slope(xs, es, curvature: bool = False):
    """Least-squares c x + b, plus d / x^2 when ``curvature`` (smooth V near x0)."""
    xs, es = np.asarray(xs), np.asarray(es)
    cols = [xs, np.ones_like(xs)] + ([xs**-2.0] if curvature and len(xs) > 3 else [])
    A = np.vstack(cols).T
    coef, *_ = np.linalg.lstsq(A, es, rcond=None)
    return float(coef[0]), float(coef[1])


def _resample(V: Field | Callable, points: tuple[np.ndarray, np.ndarray, np.ndarray]) -> np.ndarray:
    """V at arbitrary points: callables are evaluated, lattice fields interpolated (cubic, periodic)."""
    X, Y, Z = points
    if callable(V):
        return np.asarray(V(X, Y, Z), dtype=float)
    g = V.grid
    idx = [(c + 0.5 * g.box_length) / g.spacing for c in (X, Y, Z)]
    return map_coordinates(V.values, idx, order=3, mode="grid-wrap")


def _tail_mass(u: Field) -> float:
    g = u.grid
    out = g.radius() >= 0.25 * g.box_length
    return float(np.sum(u.values[out] ** 2) / np.sum(u.values**2))


def scaling_probe(u1: Field, u2: Field, V1, V2, p: Params, lambdas: Sequence[float]) -> ProbeReport:
    """E along lam^{3/2} u_i(lam x): kinetic and Hartree scale analytically, V is resampled at x/lam."""
    g = _same_grid(u1, u2)
    lambdas = [float(x) for x in lambdas]
    if any(x < 1 for x in lambdas):
        raise ValueError("dilation factors must be >= 1")
    # the support radius L/4 must keep at least one lattice cell after dilation
    lam_max = g.n / 4
    if max(lambdas) > lam_max:
        raise ValueError(f"lambda {max(lambdas)} aliases on this grid (max {lam_max:g})")
    for name, u in (("u1", u1), ("u2", u2)):
        tm = _tail_mass(u)
        if tm > 1e-6:
            raise ValueError(f"{name} is not compactly concentrated (tail mass {tm:.2e} outside L/4)")
    d11, d22, d12 = hartree_matrix(u1, u2)
    k = g.wavenumber()
    hats = [fft(u.values) for u in (u1, u2)]
    pw = [h.real**2 + h.imag**2 for h in hats]
    X, Y, Z = g.coordinates()
    dv = g.cell_volume
    energies = []
    for lam in lambdas:
        mult = np.sqrt((lam * k) ** 2 + p.m**2)
        kin = sum(float(np.sum(mult * w)) for w in pw) * dv / g.n**3
        pot = 0.0
        for u, V in ((u1, V1), (u2, V2)):
            pot += float(np.vdot(_resample(V, (X / lam, Y / lam, Z / lam)), u.values**2)) * dv
        energies.append(kin + pot - lam * (0.5 * p.a1 * d11 + 0.5 * p.a2 * d22 + p.beta * d12))
    tail = [i for i, x in enumerate(lambdas) if x >= lambdas[-1] / 10]
    slope, icpt = _fit_slope([lambdas[i] for i in tail], [energies[i] for i in tail])
    decreasing = len(tail) >= 2 and all(energies[j] < energies[i] for i, j in zip(tail, tail[1:]))
    kin_slope = sum(float(np.sum(k * w)) for w in pw) * dv / g.n**3
    unbounded = decreasing and slope < -SLOPE_TOL * kin_slope
    return ProbeReport(tuple(lambdas), tuple(energies), slope, bool(unbounded), "lambda", icpt)


def cutoff(r: np.ndarray, radius: float) -> np.ndarray:
    """1 on |x| <= radius, C^2 ramp down to 0 at 2 radius."""
    from .potentials import smoothstep

    return 1.0 - smoothstep(r / radius - 1.0)


def concentration_probe(gs, V1, V2, p: Params, x0, r_values: Sequence[float],
                        cutoff_radius: float | None = None, box_length: float | None = None) -> ProbeReport:
    """E(psi_R, psi_R) with psi_R = A_R R^{3/2} phi(x - x0) Q(R(x - x0)) / ||Q||.

    Everything is evaluated in the frame y = R(x - x0) on the ground state's own
    lattice, where the kinetic multiplier becomes sqrt(R^2 k^2 + m^2) and the
    Hartree terms pick up a factor R.  V may be a Field (interpolated) or a
    callable of (X, Y, Z).
    """
    r_values = [float(r) for r in r_values]
    if any(r < 1 for r in r_values):
        raise ValueError("R values must be >= 1")
    if isinstance(V1, Field):
        box_length = V1.grid.box_length
    if box_length is None:
        raise ValueError("box_length is required when the potentials are callables")
    x0 = tuple(float(c) for c in x0)
    if max(abs(c) for c in x0) > 0.25 * box_length:
        raise ValueError(f"x0 = {x0} must keep a margin of L/4 from the box faces")
    for V in (V1, V2):
        if isinstance(V, Field):
            # the psi_R core (unit width / R) must span 4 lattice points for interpolation
            if 1.0 / max(r_values) < 4 * V.grid.spacing:
                raise ValueError(
                    f"R = {max(r_values)} is beyond the resolution of the potential grid "
                    f"(spacing {V.grid.spacing:.3g}); pass V as a callable"
                )
    rho = 0.125 * box_length if cutoff_radius is None else cutoff_radius
    q = gs.unit()
    g = q.grid
    Y1, Y2, Y3 = g.coordinates()
    ry = g.radius()
    k = g.wavenumber()
    dv = g.cell_volume
    energies = []
    kin_slope = 0.0
    for R in r_values:
        w = q.values * cutoff(ry / R, rho)
        w = w / math.sqrt(float(np.vdot(w, w)) * dv)
        wf = Field(g, w)
        h = fft(w)
        kin = float(np.sum(np.sqrt((R * k) ** 2 + p.m**2) * (h.real**2 + h.imag**2))) * dv / g.n**3
        d = hartree_matrix(wf, wf)[0]
        pts = (x0[0] + Y1 / R, x0[1] + Y2 / R, x0[2] + Y3 / R)
        pot = sum(float(np.vdot(_resample(V, pts), w * w)) * dv for V in (V1, V2))
        energies.append(2 * kin + pot - R * (0.5 * p.a1 + 0.5 * p.a2 + p.beta) * d)
        kin_slope = 2 * kin / R
    slope, icpt = _fit_slope(r_values, energies, curvature=True)
    top = [e for r, e in zip(r_values, energies) if r >= r_values[-1] / 10]
    decreasing = all(b < a for a, b in zip(top, top[1:]))
    unbounded = decreasing and slope < -SLOPE_TOL * kin_slope
    return ProbeReport(tuple(r_values), tuple(energies), slope, bool(unbounded), "R", icpt)


def expected_concentration_slope(p: Params, a_star: float) -> float:
    return 2.0 - (p.a1 + p.a2 + 2.0 * p.beta) / a_star


def compact_pair(grid: Grid3, radius: float | None = None) -> tuple[Field, Field]:
    """Identical unit-mass C^2 bumps supported well inside |x| < L/4."""
    rad = 0.2 * grid.box_length if radius is None else radius

    def f(X, Y, Z):
        r2 = (X * X + Y * Y + Z * Z) / rad**2
        return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)

    from .grid import normalize_mass

    u = normalize_mass(sample(f, grid))
    return u, u
