"""Periodic cubic grid, sampled real fields and the FFT contract.

Coordinates run over [-L/2, L/2)^3 so the origin sits on a lattice point
(index n/2 along each axis).  Frequencies follow the convention
``Fu(xi) = int exp(-2 pi i xi.x) u(x) dx``; angular frequency is ``k = 2 pi xi``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft

FFT_WORKERS = -1


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def is_fft_size(n: int) -> bool:
    """Accepted lattice sizes: 2^k or 3 * 2^k."""
    return _is_power_of_two(n) or (n % 3 == 0 and _is_power_of_two(n // 3))


@dataclass(frozen=True)
class Grid3:
    n: int
    box_length: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ValueError(f"grid size must be an integer, got {self.n!r}")
        if not is_fft_size(int(self.n)) or self.n < 16:
            raise ValueError(f"grid size n={self.n} must be 2^k or 3*2^k and >= 16")
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise ValueError(f"box length must be positive, got {self.box_length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def axis(self) -> np.ndarray:
        """1D coordinates -L/2 + j h, j = 0..n-1."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.n)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _coordinates(self)

    def radius(self) -> np.ndarray:
        return _radius(self)

    def frequencies(self) -> np.ndarray:
        """Frequency lattice xi (cycles per length) along one axis, FFT order."""
        return scipy.fft.fftfreq(self.n, d=self.spacing)

    def wavenumber(self) -> np.ndarray:
        """|k| = 2 pi |xi| on the full 3D lattice, FFT order."""
        return _wavenumber(self)

    def origin_index(self) -> tuple[int, int, int]:
        c = self.n // 2
        return (c, c, c)


@functools.lru_cache(maxsize=8)
def _coordinates(grid: Grid3):
    x = grid.axis()
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    for a in (X, Y, Z):
        a.setflags(write=False)
    return X, Y, Z


@functools.lru_cache(maxsize=8)
def _radius(grid: Grid3):
    X, Y, Z = _coordinates(grid)
    r = np.sqrt(X**2 + Y**2 + Z**2)
    r.setflags(write=False)
    return r


@functools.lru_cache(maxsize=8)
def _wavenumber(grid: Grid3):
    k = 2.0 * np.pi * grid.frequencies()
    KX, KY, KZ = np.meshgrid(k, k, k, indexing="ij", sparse=True)
    kk = np.sqrt(KX**2 + KY**2 + KZ**2)
    kk.setflags(write=False)
    return kk


def make_grid(n: int, box_length: float) -> Grid3:
    return Grid3(n, box_length)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a scalar function on a Grid3."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        v = v.copy() if v is self.values and v.flags.writeable else v
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def squared(self) -> "Field":
        return Field(self.grid, self.values**2)

    def mass(self) -> float:
        return inner_product(self, self)

    def norm(self) -> float:
        return float(np.sqrt(self.mass()))


def _same_grid(*fields: Field) -> Grid3:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError(f"grid mismatch: {g} vs {f.grid}")
    return g


def zeros(grid: Grid3) -> Field:
    return Field(grid, np.zeros(grid.shape))


def constant(grid: Grid3, c: float) -> Field:
    return Field(grid, np.full(grid.shape, float(c)))


def sample(f: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray], grid: Grid3) -> Field:
    """Evaluate ``f(X, Y, Z)`` at every lattice point."""
    X, Y, Z = grid.coordinates()
    with np.errstate(all="ignore"):
        v = np.broadcast_to(np.asarray(f(X, Y, Z), dtype=float), grid.shape)
    bad = ~np.isfinite(v)
    if bad.any():
        i, j, k = np.argwhere(bad)[0]
        point = (float(X[i, j, k]), float(Y[i, j, k]), float(Z[i, j, k]))
        raise ValueError(f"non-finite sample at x={point} (index {(int(i), int(j), int(k))})")
    return Field(grid, np.array(v))


def inner_product(a: Field, b: Field) -> float:
    g = _same_grid(a, b)
    return float(np.vdot(a.values, b.values)) * g.cell_volume


def normalize_mass(u: Field, target: float = 1.0) -> Field:
    if target <= 0:
        raise ValueError("target mass must be positive")
    m = u.mass()
    if m <= 0:
        raise ValueError("cannot normalize a zero field")
    return Field(u.grid, u.values * np.sqrt(target / m))


# transform contract ---------------------------------------------------------

def fft(values: np.ndarray) -> np.ndarray:
    return scipy.fft.fftn(values, workers=FFT_WORKERS)


def ifft_real(spectrum: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Inverse transform; the imaginary residue is checked then dropped."""
    z = scipy.fft.ifftn(spectrum, workers=FFT_WORKERS)
    re = z.real
    im_norm = np.linalg.norm(z.imag)
    re_norm = np.linalg.norm(re)
    if im_norm > tol * max(re_norm, 1e-300) and im_norm > 1e-300:
        raise ArithmeticError(
            f"inverse transform not real: |imag|/|real| = {im_norm / max(re_norm, 1e-300):.3e}"
        )
    return re


def forward(u: Field) -> np.ndarray:
    """Discrete forward transform (unnormalized DFT of the samples)."""
    return fft(u.values)


def inverse(spectrum: np.ndarray, grid: Grid3) -> Field:
    return Field(grid, ifft_real(spectrum))


def spectral_inner_product(a_hat: np.ndarray, b_hat: np.ndarray, grid: Grid3) -> float:
    """Frequency-side inner product; equals inner_product of the real fields."""
    return float(np.vdot(b_hat, a_hat).real) * grid.cell_volume / grid.n**3


def gaussian(grid: Grid3, width: float, center=(0.0, 0.0, 0.0), mass: float | None = 1.0) -> Field:
    """exp(-|x-c|^2 / (2 width^2)), optionally normalized to the given mass."""
    cx, cy, cz = center
    f = sample(
        lambda X, Y, Z: np.exp(-((X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2) / (2 * width**2)),
        grid,
    )
    return normalize_mass(f, mass) if mass is not None else f
