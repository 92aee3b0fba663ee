import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_min.grid import Field, gaussian, make_grid, sample
from hartree_min.operators import (
    KineticSpec,
    apply_kinetic,
    coulomb_kernel_hat,
    coulomb_potential,
    hartree_energy,
    hartree_matrix,
    kinetic_energy,
    potential_energy,
    quarter_laplacian_energy,
)

G16 = make_grid(64, 16.0)
SMALL = make_grid(32, 12.0)

# Frozen oracles for u = pi^{-3/4} exp(-|x|^2 / 2) in three dimensions:
#   ||(-Delta)^{1/4} u||^2 = pi^{-3/2} 4 pi int_0^inf k^3 e^{-k^2} dk = 2 / sqrt(pi)
#   D(u, u) = sqrt(2 / pi),  phi_u(0) = int u^2 / |x| = 2 / sqrt(pi)
T_GAUSS = 2 / math.sqrt(math.pi)
D_GAUSS = math.sqrt(2 / math.pi)
PHI0_GAUSS = 2 / math.sqrt(math.pi)


def test_kernel_zero_mode():
    kh = coulomb_kernel_hat(SMALL)
    assert kh[0, 0, 0] == pytest.approx(2 * math.pi * (SMALL.box_length / 2) ** 2)
    assert np.all(kh >= 0)


def test_quarter_energy_of_gaussian():
    # the |k| cusp at k = 0 makes the frequency-lattice sum converge like L^-4, not spectrally
    t16 = quarter_laplacian_energy(gaussian(G16, 1.0))
    t12 = quarter_laplacian_energy(gaussian(make_grid(64, 12.0), 1.0))
    assert t16 == pytest.approx(T_GAUSS, rel=2e-3)
    assert (T_GAUSS - t12) / (T_GAUSS - t16) == pytest.approx((16 / 12) ** 4, rel=0.05)


def test_gaussian_coulomb_oracles():
    u = gaussian(G16, 1.0)
    assert coulomb_potential(u).values[G16.origin_index()] == pytest.approx(PHI0_GAUSS, rel=1e-6)
    assert hartree_energy(u, u) == pytest.approx(D_GAUSS, rel=1e-6)


def test_gaussian_potential_matches_erf_profile():
    # phi(r) = erf(r) / r for the unit-mass Gaussian charge, exact inside L/4
    from scipy.special import erf

    u = gaussian(G16, 1.0)
    phi = coulomb_potential(u).values
    r = G16.radius()
    sel = (r > 0.5) & (r < 4.0)
    np.testing.assert_allclose(phi[sel], erf(r[sel]) / r[sel], rtol=1e-6)


def test_mass_term_raises_kinetic_energy():
    u = gaussian(SMALL, 1.0)
    t0 = kinetic_energy(u, KineticSpec(0.0))
    t1 = kinetic_energy(u, KineticSpec(1.0))
    assert t0 < t1 <= t0 + 1.0 + 1e-12  # sqrt(k^2+m^2) <= k + m


def test_negative_mass_rejected():
    with pytest.raises(ValueError):
        KineticSpec(-1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 3.0))
def test_kinetic_is_symmetric_and_positive(seed, m):
    rng = np.random.default_rng(seed)
    a = Field(SMALL, rng.normal(size=SMALL.shape))
    b = Field(SMALL, rng.normal(size=SMALL.shape))
    spec = KineticSpec(m)
    ab = float(np.vdot(apply_kinetic(a, spec).values, b.values))
    ba = float(np.vdot(a.values, apply_kinetic(b, spec).values))
    assert ab == pytest.approx(ba, rel=1e-9, abs=1e-9)
    assert kinetic_energy(a, spec) >= 0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.6, 1.6), st.floats(0.6, 1.6))
def test_hartree_matrix_symmetric_and_consistent(w1, w2):
    u = gaussian(SMALL, w1, (0.5, 0, 0))
    v = gaussian(SMALL, w2, (-0.5, 0.3, 0))
    duu, dvv, duv = hartree_matrix(u, v)
    assert duu == pytest.approx(hartree_energy(u, u), rel=1e-12)
    assert dvv == pytest.approx(hartree_energy(v, v), rel=1e-12)
    assert duv == pytest.approx(hartree_energy(v, u), rel=1e-10)
    # positive definite kernel: D(u,v)^2 <= D(u,u) D(v,v)
    assert duv**2 <= duu * dvv * (1 + 1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.6, 1.0), st.floats(1.05, 1.2))
def test_quarter_energy_scales_inversely_with_width(w, s):
    # T(u_w) ~ 1/w for unit-mass Gaussians; widths stay small so the L^-4 box error is negligible
    t1 = quarter_laplacian_energy(gaussian(G16, w))
    t2 = quarter_laplacian_energy(gaussian(G16, w * s))
    assert t1 / t2 == pytest.approx(s, rel=5e-3)


def test_potential_energy():
    u = gaussian(SMALL, 1.0)
    V = sample(lambda X, Y, Z: X * X + Y * Y + Z * Z, SMALL)
    # <|x|^2> for u^2 = pi^{-3/2} exp(-|x|^2) is 3/2
    assert potential_energy(u, V) == pytest.approx(1.5, rel=1e-8)
