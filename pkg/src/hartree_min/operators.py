"""Pseudo-relativistic kinetic operator and Coulomb convolution on a Grid3.

The Coulomb kernel is the free-space 1/|x| truncated at R_c = L/2.  In
angular frequency its transform is ``4 pi (1 - cos(k R_c)) / k^2`` with the
finite limit ``2 pi R_c^2`` at k = 0, so densities concentrated within L/4
of the origin see the free-space potential inside that ball with no
periodic images.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid3, _same_grid, fft, ifft_real, inner_product


@dataclass(frozen=True)
class KineticSpec:
    m: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m < 0:
            raise ValueError(f"mass parameter must be finite and >= 0, got {self.m}")


def kinetic_multiplier(grid: Grid3, m: float = 0.0) -> np.ndarray:
    return _kinetic_multiplier(grid, float(m))


@functools.lru_cache(maxsize=16)
def _kinetic_multiplier(grid: Grid3, m: float) -> np.ndarray:
    k = grid.wavenumber()
    mult = np.sqrt(k**2 + m**2) if m else np.array(k)
    mult.setflags(write=False)
    return mult


def coulomb_kernel_hat(grid: Grid3, cutoff: float | None = None) -> np.ndarray:
    return _coulomb_kernel_hat(grid, None if cutoff is None else float(cutoff))


@functools.lru_cache(maxsize=8)
def _coulomb_kernel_hat(grid: Grid3, cutoff: float | None) -> np.ndarray:
    rc = 0.5 * grid.box_length if cutoff is None else cutoff
    k = grid.wavenumber()
    with np.errstate(divide="ignore", invalid="ignore"):
        kh = 4.0 * np.pi * (1.0 - np.cos(k * rc)) / k**2
    kh[0, 0, 0] = 2.0 * np.pi * rc**2
    kh.setflags(write=False)
    return kh


# array-level kernels, shared by the solvers ---------------------------------

def _kinetic(values: np.ndarray, grid: Grid3, m: float) -> np.ndarray:
    return ifft_real(kinetic_multiplier(grid, m) * fft(values))


def _potential(density: np.ndarray, grid: Grid3) -> np.ndarray:
    return ifft_real(coulomb_kernel_hat(grid) * fft(density))


def _quadratic_form(values: np.ndarray, grid: Grid3, m: float) -> float:
    uh = fft(values)
    w = kinetic_multiplier(grid, m)
    return float(np.sum(w * (uh.real**2 + uh.imag**2))) * grid.cell_volume / grid.n**3


# public operations ----------------------------------------------------------

def apply_kinetic(u: Field, spec: KineticSpec = KineticSpec()) -> Field:
    """sqrt(-Delta + m^2) u as a Fourier multiplier."""
    return Field(u.grid, _kinetic(u.values, u.grid, spec.m))


def kinetic_energy(u: Field, spec: KineticSpec = KineticSpec()) -> float:
    """(sqrt(-Delta + m^2) u, u), evaluated on the frequency side."""
    return _quadratic_form(u.values, u.grid, spec.m)


def quarter_laplacian_energy(u: Field) -> float:
    """||(-Delta)^{1/4} u||_2^2."""
    return _quadratic_form(u.values, u.grid, 0.0)


def coulomb_potential(u: Field) -> Field:
    """phi_u = |x|^{-1} * u^2."""
    return Field(u.grid, _potential(u.values**2, u.grid))


def hartree_energy(u: Field, v: Field) -> float:
    """iint u^2(x) v^2(y) / |x - y| dx dy."""
    g = _same_grid(u, v)
    phi = _potential(u.values**2, g)
    return float(np.vdot(phi, v.values**2)) * g.cell_volume


def hartree_matrix(u: Field, v: Field) -> tuple[float, float, float]:
    """(D(u,u), D(v,v), D(u,v)) with two convolutions instead of three."""
    g = _same_grid(u, v)
    pu = _potential(u.values**2, g)
    pv = _potential(v.values**2, g)
    dv = g.cell_volume
    return (
        float(np.vdot(pu, u.values**2)) * dv,
        float(np.vdot(pv, v.values**2)) * dv,
        0.5 * (float(np.vdot(pu, v.values**2)) + float(np.vdot(pv, u.values**2))) * dv,
    )


def potential_energy(u: Field, V: Field) -> float:
    return inner_product(V, u.squared())
