import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_min.grid import Field, gaussian, make_grid
from hartree_min.ground_state import (
    check_decay,
    cube_symmetry_defect,
    decay_profile,
    euler_lagrange_residual,
    resample_q,
    scaled_weinstein_quotient,
    solve_scalar_ground_state,
    weinstein_quotient,
)
from hartree_min.operators import coulomb_potential, hartree_energy, quarter_laplacian_energy

# W of a Gaussian from the frozen operator oracles: (2/sqrt(pi)) / sqrt(2/pi) = sqrt(2)
W_GAUSS = math.sqrt(2.0)


def test_weinstein_of_gaussian():
    g = make_grid(64, 16.0)
    # inherits the O(L^-4) deficit of the quarter energy on a torus
    assert weinstein_quotient(gaussian(g, 1.0)) == pytest.approx(W_GAUSS, rel=2e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(1.0, 8.0))
def test_weinstein_scale_invariance(c, lam):
    u = gaussian(make_grid(32, 12.0), 1.0)
    w = weinstein_quotient(u)
    assert weinstein_quotient(u * c) == pytest.approx(w, rel=1e-12)
    assert scaled_weinstein_quotient(u, lam) == pytest.approx(w, rel=1e-12)


def test_weinstein_zero_field():
    g = make_grid(16, 4.0)
    with pytest.raises(ValueError):
        weinstein_quotient(Field(g, np.zeros(g.shape)))


def test_identities(gs48, gs64):
    for gs in (gs48, gs64):
        t, m, d = quarter_laplacian_energy(gs.q), gs.q.mass(), hartree_energy(gs.q, gs.q)
        assert t == pytest.approx(m, rel=1e-3)
        assert m == pytest.approx(d / 2, rel=1e-3)
        assert gs.a_star == pytest.approx(m, rel=1e-12)
        assert gs.pohozaev_residual < 1e-3
        assert gs.weinstein_min == pytest.approx(gs.a_star / 2, rel=1e-3)


def test_euler_lagrange(gs64):
    assert euler_lagrange_residual(gs64.q) < 1e-3
    assert gs64.el_residual < 1e-3


def test_grid_convergence(gs48, gs64):
    assert gs48.a_star == pytest.approx(gs64.a_star, rel=0.02)


def test_positive_and_symmetric(gs64):
    q = gs64.q.values
    assert q.min() >= -1e-8 * q.max()
    assert cube_symmetry_defect(gs64.q) < 1e-6
    assert np.unravel_index(np.argmax(q), q.shape) == gs64.q.grid.origin_index()


def test_radial_monotone(gs64):
    # within L/4 the truncated kernel is exactly free-space; the box edge is not
    prof = gs64.profile()
    r = np.linspace(0, 0.25 * gs64.q.grid.box_length, 200)
    assert np.all(np.diff(prof(r)) <= 1e-10 * prof(0.0))


def test_decay_constant_finite(gs64):
    c_q, _ = check_decay(gs64)
    assert math.isfinite(c_q) and c_q > 0
    assert gs64.decay_constant == pytest.approx(c_q)


def test_decay_constant_stable_across_window(gs64):
    # the per-shell sup of Q (1 + |x|)^4 should vary by less than 20% over the window
    prof = decay_profile(gs64.q)
    variation = (prof.max() - prof.min()) / prof.max()
    assert variation < 0.2, f"per-shell constants {np.round(prof, 3)} vary by {variation:.1%}"


def test_coulomb_tail_carries_total_charge(gs64):
    # Newton: phi_Q(x)(1+|x|) -> ||Q||^2 far out; take the outermost shell of the window
    g = gs64.q.grid
    r = g.radius()
    phi = coulomb_potential(gs64.q).values
    shell = (r >= 0.34 * g.box_length) & (r <= 0.375 * g.box_length)
    c_phi = float(np.max(phi[shell] * (1 + r[shell])))
    assert c_phi == pytest.approx(gs64.a_star, rel=0.1)


def test_resample_round_trip(gs64):
    back = resample_q(gs64, gs64.q.grid)
    np.testing.assert_allclose(back.values, gs64.q.values, atol=1e-3 * gs64.q.values.max())


def test_seed_must_fit_box():
    with pytest.raises(ValueError, match="boundary mass"):
        solve_scalar_ground_state(make_grid(32, 4.0))


def test_q_is_a_fixed_point(gs48):
    # Q lives on the rescaled lattice with the same sample array as the solve lattice
    again = solve_scalar_ground_state(gs48.solve_grid, seed=gs48.q.values)
    assert again.iterations <= 2
    assert again.a_star == pytest.approx(gs48.a_star, rel=1e-10)


def test_seed_shape_checked():
    g = make_grid(32, 16.0)
    with pytest.raises(ValueError):
        solve_scalar_ground_state(g, seed=np.ones((16, 16, 16)))


def test_small_solve_is_consistent():
    # coarse but complete: the identities hold to lattice precision on any grid
    gs = solve_scalar_ground_state(make_grid(32, 32.0))
    t, m, d = quarter_laplacian_energy(gs.q), gs.q.mass(), hartree_energy(gs.q, gs.q)
    assert t == pytest.approx(m, rel=1e-8) and d == pytest.approx(2 * m, rel=1e-8)
    assert gs.a_star == pytest.approx(2.69, rel=0.05)
