"""Trapping potentials V >= 0 with inf V = 0 on the box."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import Field, Grid3, normalize_mass, sample
from .operators import KineticSpec, hartree_energy, kinetic_energy

KINDS = ("zero", "harmonic", "power", "double_well", "tabulated")
MIN_WELL_SEPARATION = 5.0


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    omega: float = 1.0
    power: float = 2.0
    coeff: float = 1.0
    x1: tuple[float, float, float] = (-2.75, 0.0, 0.0)
    x2: tuple[float, float, float] = (2.75, 0.0, 0.0)
    depth_scale: float = 1.0
    # which well is this component's own (double_well only)
    which: int = 1
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "power" and (self.power <= 0 or self.coeff <= 0):
            raise ValueError("power potential needs p > 0 and c > 0")
        if self.kind == "double_well":
            sep = math.dist(self.x1, self.x2)
            if sep <= MIN_WELL_SEPARATION:
                raise ValueError(f"wells must be more than {MIN_WELL_SEPARATION} apart, got {sep:.3f}")
            if self.which not in (1, 2):
                raise ValueError("which must be 1 or 2")
            if self.depth_scale < 1:
                raise ValueError("depth_scale must be >= 1 so that V >= 2 c_zeta off the wells")
        if self.kind == "tabulated" and not self.path:
            raise ValueError("tabulated potential needs a path")

    @property
    def center(self) -> tuple[float, float, float]:
        """Location of the potential's minimum."""
        if self.kind == "double_well":
            return self.x1 if self.which == 1 else self.x2
        return (0.0, 0.0, 0.0)

    @property
    def trapping(self) -> bool:
        return self.kind != "zero"


@dataclass(frozen=True)
class WellContext:
    """Physical constants the double-well depth depends on."""

    a_star: float
    beta: float
    m: float = 0.0


def smoothstep(s: np.ndarray) -> np.ndarray:
    """C^2 ramp from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s)


def bump(grid: Grid3, center) -> Field:
    """Unit-mass C^2 bump supported in the unit ball around ``center``."""
    cx, cy, cz = center

    def f(X, Y, Z):
        r2 = (X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2
        return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)

    return normalize_mass(sample(f, grid))


def c_zeta(grid: Grid3, x1, x2, ctx: WellContext) -> float:
    """Energy of the two bumps at the border parameters a1 = a2 = a* - beta."""
    z1, z2 = bump(grid, x1), bump(grid, x2)
    spec = KineticSpec(ctx.m)
    half = 0.5 * (ctx.a_star - ctx.beta)
    c = (
        kinetic_energy(z1, spec)
        + kinetic_energy(z2, spec)
        - half * (hartree_energy(z1, z1) + hartree_energy(z2, z2))
        - ctx.beta * hartree_energy(z1, z2)
    )
    if c <= 0:
        raise ValueError(f"c_zeta = {c:.4g} is not positive; the double-well template needs c_zeta > 0")
    return c


def potential_function(spec: PotentialSpec, grid: Grid3 | None = None,
                       ctx: WellContext | None = None) -> Callable:
    """V as a callable of (X, Y, Z); the double well needs a grid and context for c_zeta."""
    k = spec.kind
    if k == "zero":
        return lambda X, Y, Z: np.zeros(np.broadcast(X, Y, Z).shape)
    if k == "harmonic":
        w2 = spec.omega**2
        return lambda X, Y, Z: w2 * (X * X + Y * Y + Z * Z)
    if k == "power":
        p, c = spec.power, spec.coeff
        return lambda X, Y, Z: c * np.sqrt(X * X + Y * Y + Z * Z) ** p
    if k == "double_well":
        if grid is None or ctx is None:
            raise ValueError("double_well needs the grid and (a_star, beta, m) to size its depth")
        depth = 2.0 * spec.depth_scale * c_zeta(grid, spec.x1, spec.x2, ctx)
        cx, cy, cz = spec.center

        def v(X, Y, Z):
            r = np.sqrt((X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2)
            # flat on B1, ramps to the plateau by r = 2, then grows so V -> infinity
            return depth * smoothstep(r - 1.0) + np.maximum(r - 2.0, 0.0) ** 3

        return v
    raise ValueError("tabulated potentials have no closed form")


def build_potential(spec: PotentialSpec, grid: Grid3, ctx: WellContext | None = None) -> Field:
    """Sample V on the grid and shift its minimum to exactly 0."""
    if spec.kind == "tabulated":
        values = _load_table(Path(spec.path), grid)
    else:
        if spec.kind == "double_well":
            half = 0.25 * grid.box_length
            for x in (spec.x1, spec.x2):
                if math.hypot(*x) >= half:
                    raise ValueError(f"well center {x} must lie inside |x| < L/4 = {half}")
        values = sample(potential_function(spec, grid, ctx), grid).values
    values = values - values.min()
    return Field(grid, values)


def _load_table(path: Path, grid: Grid3) -> np.ndarray:
    try:
        values = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read tabulated potential {path}: {exc}") from exc
    if values.shape != grid.shape:
        raise ValueError(f"tabulated potential {path} has shape {values.shape}, grid needs {grid.shape}")
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"tabulated potential {path} has non-finite samples")
    if values.min() < 0:
        raise ValueError(f"tabulated potential {path} has negative samples")
    return values


@dataclass
class PotentialPair:
    V1: Field
    V2: Field
    f1: Callable | None = field(default=None, repr=False)
    f2: Callable | None = field(default=None, repr=False)


def build_pair(s1: PotentialSpec, s2: PotentialSpec, grid: Grid3,
               ctx: WellContext | None = None) -> PotentialPair:
    V1 = build_potential(s1, grid, ctx)
    V2 = build_potential(s2, grid, ctx)
    f1 = None if s1.kind == "tabulated" else potential_function(s1, grid, ctx)
    f2 = None if s2.kind == "tabulated" else potential_function(s2, grid, ctx)
    return PotentialPair(V1, V2, f1, f2)
