"""Run configuration: a flat ``key = value`` file, CLI overrides and an echo that re-parses."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .energy import Params, params_from_multiples
from .minimizer import MinimizerOptions
from .potentials import PotentialSpec, WellContext

A_UNITS = ("a_star", "abs")
BETA_UNITS = ("beta_low", "beta_high", "a_star", "abs")


def _vec(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError(f"expected three coordinates, got {text!r}")
    return tuple(parts)


@dataclass(frozen=True)
class RunConfig:
    # ground-state grid
    gs_n: int = 64
    gs_box: float = 32.0
    # minimization grid
    n: int = 48
    box: float = 12.0
    a1: float = 0.5
    a2: float = 0.5
    a_unit: str = "a_star"
    beta: float = 0.5
    beta_unit: str = "beta_low"
    m: float = 0.0
    v1: str = "harmonic"
    v2: str = "harmonic"
    omega: float = 1.0
    power: float = 2.0
    coeff: float = 1.0
    x1: tuple = (-2.75, 0.0, 0.0)
    x2: tuple = (2.75, 0.0, 0.0)
    depth_scale: float = 1.0
    v1_path: str = ""
    v2_path: str = ""
    tol_e: float = 1e-10
    tol_r: float = 1e-4
    max_iter: int = 5000
    energy_floor: float = -1e6
    preconditioner: str = "combined"
    eta: bool = False
    eta_trials: int = 60
    sweep_a_min: float = 0.1
    sweep_a_max: float = 1.5
    sweep_a_count: int = 11
    sweep_beta_min: float = 0.0
    sweep_beta_max: float = 1.5
    sweep_beta_count: int = 11
    sweep_beta_unit: str = "a_star"
    # "a1" ties a2 to a1 in sweeps; otherwise a multiple of a*
    sweep_a2: str = "a1"
    jobs: int = 1
    output: str = "hartree-out"

    def __post_init__(self):
        if self.a_unit not in A_UNITS:
            raise ValueError(f"a_unit must be one of {A_UNITS}")
        for name in ("beta_unit", "sweep_beta_unit"):
            if getattr(self, name) not in BETA_UNITS:
                raise ValueError(f"{name} must be one of {BETA_UNITS}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.sweep_a_count < 0 or self.sweep_beta_count < 0:
            raise ValueError("sweep counts must be >= 0")

    # conversions -------------------------------------------------------------

    def params(self, a_star: float) -> Params:
        if self.a_unit == "a_star":
            return params_from_multiples(self.a1, self.a2, self.beta, a_star, self.beta_unit, self.m)
        return params_from_multiples(self.a1 / a_star, self.a2 / a_star, self.beta, a_star,
                                     self.beta_unit, self.m)

    def potential_spec(self, which: int) -> PotentialSpec:
        kind = self.v1 if which == 1 else self.v2
        path = (self.v1_path if which == 1 else self.v2_path) or None
        return PotentialSpec(kind, omega=self.omega, power=self.power, coeff=self.coeff,
                             x1=tuple(self.x1), x2=tuple(self.x2), depth_scale=self.depth_scale,
                             which=which, path=path)

    def well_context(self, p: Params, a_star: float) -> WellContext:
        return WellContext(a_star, p.beta, p.m)

    def options(self, a_star: float | None = None) -> MinimizerOptions:
        return MinimizerOptions(tol_e=self.tol_e, tol_r=self.tol_r, max_iter=self.max_iter,
                                energy_floor=self.energy_floor, preconditioner=self.preconditioner,
                                a_star=a_star)

    # text form ---------------------------------------------------------------

    def to_text(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = " ".join(repr(float(x)) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _convert(name: str, raw: str, default):
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{name}: expected a boolean, got {raw!r}")
        return low in ("true", "1", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return _vec(raw)
    return raw.strip()


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[run]\n" + text)
    base = base or RunConfig()
    known = {f.name: getattr(base, f.name) for f in fields(base)}
    updates = {}
    for key, raw in cp["run"].items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        updates[key] = _convert(key, raw, known[key])
    return dataclasses.replace(base, **updates)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text())


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    known = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in known:
            raise ValueError(f"unknown setting {key!r}")
        updates[key] = _convert(key, str(value), known[key]) if isinstance(value, str) else value
    return dataclasses.replace(cfg, **updates)
