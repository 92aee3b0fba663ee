"""Coupled energy, the auxiliary quotient J, thresholds and the existence classifier."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .grid import Field, Grid3, _same_grid, fft, gaussian, ifft_real
from .operators import (
    KineticSpec,
    _kinetic,
    _potential,
    hartree_matrix,
    kinetic_energy,
    kinetic_multiplier,
    potential_energy,
    quarter_laplacian_energy,
)

STRIP_MARGIN = 1.02
MASS_TOL = 1e-8
MAX_RELATIVE_DILATION = 1.5


@dataclass(frozen=True)
class Params:
    a1: float
    a2: float
    beta: float
    m: float = 0.0

    def __post_init__(self):
        for name in ("a1", "a2", "beta", "m"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.a1 < 0 or self.a2 < 0:
            raise ValueError("a1 and a2 must be nonnegative")
        if self.m < 0:
            raise ValueError("m must be nonnegative")

    @property
    def beta_plus(self) -> float:
        return max(0.0, self.beta)


@dataclass(frozen=True)
class Thresholds:
    a_star: float
    beta_low: float | None
    beta_high: float

    @property
    def beta_low_defined(self) -> bool:
        return self.beta_low is not None


class Outcome(str, enum.Enum):
    EXISTS = "ExistsMinimizer"
    NONE = "NoMinimizer"
    INDETERMINATE = "IndeterminateStrip"
    STRIP_EXISTS = "StripExistsByContinuity"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    rule: str
    params: Params
    thresholds: Thresholds
    eta_lower: float | None
    eta_upper: float | None
    eta_estimate: float | None = None

    def record(self) -> dict:
        p = self.params
        t = self.thresholds
        return {
            "a1": p.a1,
            "a2": p.a2,
            "beta": p.beta,
            "m": p.m,
            "a_star": t.a_star,
            "beta_low": t.beta_low,
            "beta_high": t.beta_high,
            "eta_lower": self.eta_lower,
            "eta_upper": self.eta_upper,
            "eta_estimate": self.eta_estimate,
            "verdict": self.outcome.value,
            "rule": self.rule,
        }


# energy -----------------------------------------------------------------------

def _check_potential(V: Field) -> None:
    if np.min(V.values) < 0:
        raise ValueError(f"potential has negative samples (min {np.min(V.values):.3e})")


def total_energy(u1: Field, u2: Field, V1: Field, V2: Field, p: Params) -> float:
    _same_grid(u1, u2, V1, V2)
    _check_potential(V1)
    _check_potential(V2)
    spec = KineticSpec(p.m)
    d11, d22, d12 = hartree_matrix(u1, u2)
    return (
        kinetic_energy(u1, spec)
        + potential_energy(u1, V1)
        + kinetic_energy(u2, spec)
        + potential_energy(u2, V2)
        - 0.5 * p.a1 * d11
        - 0.5 * p.a2 * d22
        - p.beta * d12
    )


def _check_unit(u: Field, name: str) -> None:
    m = u.mass()
    if abs(m - 1.0) > MASS_TOL:
        raise ValueError(f"{name} must have unit mass, got {m:.12g}")


def j_quotient(u1: Field, u2: Field, p: Params) -> float:
    """2(T1 + T2) / (a1 D11 + a2 D22 + 2 beta+ D12) over unit-mass pairs."""
    _check_unit(u1, "u1")
    _check_unit(u2, "u2")
    return _j_value(u1, u2, p)


def _j_value(u1: Field, u2: Field, p: Params) -> float:
    d11, d22, d12 = hartree_matrix(u1, u2)
    den = p.a1 * d11 + p.a2 * d22 + 2.0 * p.beta_plus * d12
    if den <= 0:
        raise ValueError("J undefined: zero denominator")
    return 2.0 * (quarter_laplacian_energy(u1) + quarter_laplacian_energy(u2)) / den


def gamma(t: float, p: Params, a_star: float) -> float:
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    den = p.a1 + p.a2 * t * t + 2.0 * p.beta_plus * t
    if den <= 0:
        raise ValueError("gamma undefined: zero denominator")
    return a_star * (1.0 + t * t) / den


# thresholds and bounds ------------------------------------------------------------

def thresholds(a1: float, a2: float, a_star: float) -> Thresholds:
    if a_star <= 0:
        raise ValueError("a_star must be positive")
    rad = (a_star - a1) * (a_star - a2)
    low = math.sqrt(rad) if rad >= 0 else None
    return Thresholds(a_star, low, 0.5 * (a_star - a1) + 0.5 * (a_star - a2))


def eta_bounds(p: Params, a_star: float) -> tuple[float, float]:
    """Analytic bracket for eta; negative coupling reduces to beta = 0."""
    b = p.beta_plus
    if p.a1 == 0 and p.a2 == 0 and b == 0:
        raise ValueError("eta bounds undefined for all-zero parameters")
    lower = a_star / max(p.a1 + b, p.a2 + b)
    upper = 2.0 * a_star / (p.a1 + p.a2 + 2.0 * b)
    return lower, upper


# eta estimate ------------------------------------------------------------------------

class EtaEstimateError(RuntimeError):
    """The numerical estimate left the analytic sandwich."""


def _unit(values: np.ndarray, grid: Grid3) -> Field:
    return Field(grid, values / math.sqrt(float(np.vdot(values, values)) * grid.cell_volume))


def _trial_pairs(gs, grid: Grid3):
    from .ground_state import resample_q

    same = grid == gs.q.grid
    base = gs.unit() if same else _unit(resample_q(gs, grid).values, grid)
    yield "Q,Q", base, base
    # small relative dilations only: wide copies feel the periodic box and
    # narrow ones lose resolution, and both bias the lattice quotient low
    for t in (1.1, 1.25, 1.4):
        other = _unit(resample_q(gs, grid, scale=t).values, grid)
        yield f"Q,Q@{t}", base, other
        yield f"Q@{t},Q", other, base
    for s in (1.0, 2.0):
        shifted = _unit(resample_q(gs, grid, center=(s, 0.0, 0.0)).values, grid)
        yield f"Q,Q+{s}", base, shifted
    for w1, w2 in ((1.0, 1.0), (0.8, 1.2), (1.2, 0.8)):
        yield f"G{w1},G{w2}", gaussian(grid, w1), gaussian(grid, w2)


def _dilation_family(gs, grid: Grid3, p: Params):
    """min over t of J(Q, Q(t .)) using the exact scaling of the self terms."""
    from .ground_state import resample_q

    base = gs.unit() if grid == gs.q.grid else _unit(resample_q(gs, grid).values, grid)

    def j_of(logt):
        t = math.exp(logt)
        if t >= 1:
            u1, u2 = base, _unit(resample_q(gs, grid, scale=t).values, grid)
        else:
            u1, u2 = _unit(resample_q(gs, grid, scale=1 / t).values, grid), base
        return _j_value(u1, u2, p), (u1, u2)

    span = math.log(MAX_RELATIVE_DILATION)
    res = minimize_scalar(lambda s: j_of(s)[0], bounds=(-span, span), method="bounded",
                          options={"xatol": 1e-3})
    return j_of(res.x)


class _PairDescent:
    """Projected descent of J on unit-mass pairs at fixed quarter energies."""

    def __init__(self, grid: Grid3, p: Params):
        from .ground_state import _Workspace

        self.ws = _Workspace(grid)
        self.grid = grid
        self.p = p
        self.dv = grid.cell_volume
        self.k = np.broadcast_to(kinetic_multiplier(grid, 0.0), grid.shape)
        self.pre = 1.0 / (1.0 + self.k)

    def eval(self, u1, u2):
        p = self.p
        k1 = _kinetic(u1, self.grid, 0.0)
        k2 = _kinetic(u2, self.grid, 0.0)
        f1 = _potential(u1 * u1, self.grid)
        f2 = _potential(u2 * u2, self.grid)
        dv = self.dv
        t = (float(np.vdot(u1, k1)) + float(np.vdot(u2, k2))) * dv
        d = (p.a1 * float(np.vdot(f1, u1 * u1)) + p.a2 * float(np.vdot(f2, u2 * u2))
             + 2 * p.beta_plus * float(np.vdot(f1, u2 * u2))) * dv
        j = 2 * t / d
        b = p.beta_plus
        g1 = (4 * k1 - j * (4 * p.a1 * f1 * u1 + 4 * b * f2 * u1)) / d
        g2 = (4 * k2 - j * (4 * p.a2 * f2 * u2 + 4 * b * f1 * u2)) / d
        return j, t, (g1, g2), (k1, k2)

    def retract(self, u1, u2, c):
        return [self.ws.to_gauge(u, ci) for u, ci in zip((u1, u2), c)]

    def run(self, u1, u2, steps: int):
        j, _, g, kus = self.eval(u1, u2)
        # each component keeps its own quarter energy; relative dilation is left to the family scan
        c = [float(np.vdot(u, ku)) * self.dv for u, ku in zip((u1, u2), kus)]
        step = 1.0
        for _ in range(steps):
            dirs = []
            slope = 0.0
            for u, gi in zip((u1, u2), g):
                pg = ifft_real(self.pre * fft(gi))
                pu = ifft_real(self.pre * fft(u))
                pg = pg - (np.vdot(u, pg) / np.vdot(u, pu)) * pu
                dirs.append(pg)
                slope -= float(np.vdot(gi, pg)) * self.dv
            if slope >= 0:
                break
            while step > 1e-10:
                n1, n2 = self.retract(u1 - step * dirs[0], u2 - step * dirs[1], c)
                jn, tn, gn, _ = self.eval(n1, n2)
                if jn <= j + 1e-4 * step * slope:
                    break
                step *= 0.5
            else:
                break
            done = (j - jn) / j < 1e-9
            u1, u2, j, g = n1, n2, jn, gn
            step = min(2 * step, 4.0)
            if done:
                break
        return j, u1, u2


def estimate_eta(p: Params, gs, grid: Grid3 | None = None, trials: int = 60) -> float:
    """Upper approximation of eta from a trial family refined by descent.

    ``trials`` bounds the descent steps applied to the best family member.
    """
    grid = gs.q.grid if grid is None else grid
    a_star = gs.a_star
    if p.beta < 0:
        p = Params(p.a1, p.a2, 0.0, p.m)
    lower, upper = eta_bounds(p, a_star)
    best = math.inf
    best_pair = None
    for _, u1, u2 in _trial_pairs(gs, grid):
        try:
            j = _j_value(u1, u2, p)
        except ValueError:
            continue
        if j < best:
            best, best_pair = j, (u1, u2)
    j, pair = _dilation_family(gs, grid, p)
    if j < best:
        best, best_pair = j, pair
    if trials > 0 and best_pair is not None:
        j, _, _ = _PairDescent(grid, p).run(best_pair[0].values, best_pair[1].values, trials)
        best = min(best, j)
    if not (lower * (1 - 1e-2) <= best <= upper * (1 + 1e-2)):
        raise EtaEstimateError(
            f"eta estimate {best:.6f} outside analytic bracket [{lower:.6f}, {upper:.6f}]"
        )
    return best


# classification ---------------------------------------------------------------------------

def classify(p: Params, t: Thresholds, eta: float | None = None) -> Verdict:
    a = t.a_star
    try:
        lo, hi = eta_bounds(p, a)
    except ValueError:
        lo = hi = None

    def verdict(outcome, rule):
        return Verdict(outcome, rule, p, t, lo, hi, eta)

    if p.a1 > a or p.a2 > a:
        return verdict(Outcome.NONE, "mass-above-critical")
    if p.beta > t.beta_high:
        return verdict(Outcome.NONE, "coupling-above-beta_high")
    inside = 0 < p.a1 < a and 0 < p.a2 < a
    if not inside:
        return verdict(Outcome.INDETERMINATE, "boundary-equality")
    if p.beta < t.beta_low:
        return verdict(Outcome.EXISTS, "coupling-below-beta_low")
    if p.beta == t.beta_high:
        return verdict(Outcome.INDETERMINATE, "boundary-equality")
    # beta_low <= beta < beta_high
    if (
        p.a1 != p.a2
        and abs(p.a1 - p.a2) <= 2 * t.beta_low
        and eta is not None
        and eta > STRIP_MARGIN
    ):
        return verdict(Outcome.STRIP_EXISTS, f"strip-eta-above-{STRIP_MARGIN}")
    return verdict(Outcome.INDETERMINATE, "strip-open")


def params_from_multiples(a1_frac: float, a2_frac: float, beta: float, a_star: float,
                          beta_unit: str = "abs", m: float = 0.0) -> Params:
    """Build Params with a_i given as multiples of a* and beta in the chosen unit.

    beta_unit is one of 'abs', 'beta_low', 'beta_high', 'a_star'.
    """
    a1, a2 = a1_frac * a_star, a2_frac * a_star
    th = thresholds(a1, a2, a_star)
    if beta_unit == "abs":
        b = beta
    elif beta_unit == "beta_low":
        if th.beta_low is None:
            raise ValueError("beta_low undefined for these masses")
        b = beta * th.beta_low
    elif beta_unit == "beta_high":
        b = beta * th.beta_high
    elif beta_unit == "a_star":
        b = beta * a_star
    else:
        raise ValueError(f"unknown beta unit {beta_unit!r}")
    return Params(a1, a2, b, m)


__all__ = [
    "Params", "Thresholds", "Outcome", "Verdict", "total_energy", "j_quotient", "gamma",
    "thresholds", "eta_bounds", "estimate_eta", "classify", "EtaEstimateError",
    "params_from_multiples", "STRIP_MARGIN",
]
