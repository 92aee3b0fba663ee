"""Closed-form ground states of the free coupled system

    sqrt(-Delta) u + u = (a phi_u + beta phi_v) u,
    sqrt(-Delta) v + v = (a phi_v + beta phi_u) v,

built from the scalar ground state Q, with the action, the Nehari identities
and the symmetric quotient h that certify them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, _same_grid
from .operators import hartree_matrix, quarter_laplacian_energy


@dataclass(frozen=True, eq=False)
class CoupledGS:
    u0: Field
    v0: Field
    k: float
    l: float
    theta: float | None
    action: float
    construction: str

    @property
    def symmetric(self) -> bool:
        return self.construction == "symmetric"


def mass_factors(a: float, beta: float) -> tuple[float, float]:
    """Solve a k + beta l = 1, beta k + a l = 1 for (k, l)."""
    det = a * a - beta * beta
    if det == 0:
        raise ValueError(f"singular mass system for a = beta = {a}; pass theta")
    k, l = np.linalg.solve(np.array([[a, beta], [beta, a]]), np.ones(2))
    return float(k), float(l)


def closed_form_coupled_gs(a: float, beta: float, gs, theta: float | None = None) -> CoupledGS:
    """(sqrt(k) Q, sqrt(l) Q) for a != beta, (Q sin t / sqrt(a), Q cos t / sqrt(a)) for a = beta."""
    if a <= 0 or beta <= 0:
        raise ValueError("a and beta must be positive")
    q = gs.q
    if a != beta:
        if theta is not None:
            raise ValueError("theta only parametrizes the a = beta family")
        k, l = mass_factors(a, beta)
        if k <= 0 or l <= 0:
            raise ValueError(f"nonpositive mass factors k={k:.6g}, l={l:.6g}")
        return CoupledGS(q * math.sqrt(k), q * math.sqrt(l), k, l, None,
                         0.5 * gs.a_star * (k + l), "asymmetric")
    if theta is None:
        raise ValueError("a = beta needs an angle theta in (0, 2 pi)")
    s, c = math.sin(theta), math.cos(theta)
    if not 0 < theta < 2 * math.pi or abs(s) < 1e-12 or abs(c) < 1e-12:
        raise ValueError(f"theta = {theta} makes a component vanish or lies outside (0, 2 pi)")
    k, l = s * s / a, c * c / a
    return CoupledGS(q * (s / math.sqrt(a)), q * (c / math.sqrt(a)), k, l, float(theta),
                     0.5 * gs.a_star * (k + l), "symmetric")


def _h_half(u: Field) -> float:
    """||u||^2 in H^{1/2} with m = 0: quarter energy plus mass."""
    return quarter_laplacian_energy(u) + u.mass()


def nehari_residual(u: Field, v: Field, a: float, beta: float) -> tuple[float, float]:
    _same_grid(u, v)
    nu, nv = _h_half(u), _h_half(v)
    if nu == 0 or nv == 0:
        raise ValueError("Nehari residual needs nonzero fields")
    duu, dvv, duv = hartree_matrix(u, v)
    return (abs(nu - a * duu - beta * duv) / nu, abs(nv - a * dvv - beta * duv) / nv)


def nehari_repair(u: Field, v: Field, a: float, beta: float) -> tuple[Field, Field, float, float]:
    """Positive (s, t) with (s u, t v) on the Nehari set.

    In x = s^2, y = t^2 the two identities are linear:
        a D_uu x + beta D_uv y = N_u,   beta D_uv x + a D_vv y = N_v.
    """
    nu, nv = _h_half(u), _h_half(v)
    duu, dvv, duv = hartree_matrix(u, v)
    m11, m12, m22 = a * duu, beta * duv, a * dvv
    det = m11 * m22 - m12 * m12
    if abs(det) <= 1e-14 * max(m11 * m22, m12 * m12, 1e-300):
        raise ValueError("degenerate Nehari scaling system")
    # direct elimination
    x = (nu * m22 - m12 * nv) / det
    y = (m11 * nv - m12 * nu) / det
    if x <= 0 or y <= 0:
        raise ValueError(f"Nehari repair needs positive squared scalars, got {x:.4g}, {y:.4g}")
    s, t = math.sqrt(x), math.sqrt(y)
    return u * s, v * t, s, t


def coupled_action(u: Field, v: Field, a: float, beta: float) -> float:
    duu, dvv, duv = hartree_matrix(u, v)
    return 0.5 * (_h_half(u) + _h_half(v)) - 0.25 * (a * duu + a * dvv + 2.0 * beta * duv)


def h_quotient(u1: Field, u2: Field, a: float) -> float:
    d11, d22, d12 = hartree_matrix(u1, u2)
    den = a * (d11 + d22 + 2.0 * d12)
    if den <= 0:
        raise ValueError("h quotient undefined: zero denominator")
    t = quarter_laplacian_energy(u1) + quarter_laplacian_energy(u2)
    return t * (u1.mass() + u2.mass()) / den
