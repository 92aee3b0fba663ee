import math

import numpy as np
import pytest

from hartree_min.energy import Params, thresholds, total_energy
from hartree_min.grid import Field, gaussian, make_grid
from hartree_min.minimizer import (
    MinimizerOptions,
    ProbeReport,
    compact_pair,
    concentration_probe,
    el_residuals,
    expected_concentration_slope,
    lagrange_multipliers,
    minimize,
    minimize_single,
    pohozaev_coupled_residual,
    scaling_probe,
)
from hartree_min.potentials import PotentialSpec, build_potential, potential_function

G = make_grid(48, 12.0)
V = build_potential(PotentialSpec("harmonic"), G)


@pytest.fixture(scope="module")
def existence_run(gs48):
    a = gs48.a_star
    p = Params(0.5 * a, 0.5 * a, 0.5 * thresholds(0.5 * a, 0.5 * a, a).beta_low)
    return p, minimize(V, V, p, G, MinimizerOptions(a_star=a))


def test_converges_on_unit_spheres(existence_run):
    p, res = existence_run
    assert res.converged and not res.diverged and res.warning is None
    for u in res.fields:
        assert u.mass() == pytest.approx(1.0, abs=1e-10)
    assert max(res.el_residual1, res.el_residual2) < 1e-4
    e = [t[0] for t in res.trace]
    assert all(y <= x for x, y in zip(e, e[1:]))


def test_reported_quantities_are_consistent(existence_run):
    p, res = existence_run
    assert res.energy == pytest.approx(total_energy(res.u1, res.u2, V, V, p), rel=1e-12)
    mu1, mu2 = lagrange_multipliers(res.u1, res.u2, V, V, p)
    assert res.mu1 == pytest.approx(mu1, rel=1e-8) and res.mu2 == pytest.approx(mu2, rel=1e-8)
    r1, r2 = el_residuals(res.u1, res.u2, V, V, p)
    assert max(r1, r2) < 1e-4


def test_symmetric_data_gives_symmetric_minimizer(existence_run):
    _, res = existence_run
    np.testing.assert_allclose(res.u1.values, res.u2.values, atol=1e-6)
    assert res.min_sample > -1e-6


def test_decoupled_equals_two_single_runs(gs48):
    a = 0.5 * gs48.a_star
    pair = minimize(V, V, Params(a, a, 0.0), G)
    one = minimize_single(V, a)
    assert pair.energy == pytest.approx(2 * one.energy, rel=1e-3)


def test_energy_below_trial_state(existence_run):
    p, res = existence_run
    g = gaussian(G, 1.0)
    assert res.energy <= total_energy(g, g, V, V, p)


def test_kinetic_preconditioner_option(gs48):
    a = 0.5 * gs48.a_star
    opts = MinimizerOptions(preconditioner="kinetic", max_iter=3000, tol_r=1e-3)
    res = minimize_single(V, a, opts=opts)
    ref = minimize_single(V, a)
    assert res.energy == pytest.approx(ref.energy, rel=1e-5)
    with pytest.raises(ValueError):
        minimize_single(V, a, opts=MinimizerOptions(preconditioner="magic"))


def test_supercritical_mass_collapses(gs48):
    a = gs48.a_star
    res = minimize(V, V, Params(1.5 * a, 0.5 * a, 0.0), G, MinimizerOptions(a_star=a))
    assert res.diverged and not res.converged
    assert res.warning and "NoMinimizer" in res.warning


def test_negative_potential_rejected(gs48):
    with pytest.raises(ValueError):
        minimize(V * -1.0, V, Params(1, 1, 0), G)


def test_pohozaev_zero_fields():
    z = Field(G, np.zeros(G.shape))
    assert pohozaev_coupled_residual(z, z, 1.0, 1.0) == 0.0


def test_probe_report_validation():
    with pytest.raises(ValueError):
        ProbeReport((1.0, 1.0), (0.0, 0.0), 0.0, False)
    with pytest.raises(ValueError):
        ProbeReport((1.0, 2.0), (0.0, float("inf")), 0.0, False)


def test_concentration_slope_matches_theory(gs48):
    a = gs48.a_star
    f = potential_function(PotentialSpec("harmonic"))
    for beta_frac, unbounded in ((1.5, True), (0.5, False)):
        p = Params(0.5 * a, 0.5 * a, beta_frac * thresholds(0.5 * a, 0.5 * a, a).beta_high)
        rep = concentration_probe(gs48, f, f, p, (0, 0, 0), np.geomspace(2, 20, 8), box_length=12.0)
        want = expected_concentration_slope(p, a)
        assert rep.slope == pytest.approx(want, rel=0.1)
        assert rep.unbounded_below is unbounded


def test_concentration_resolution_guard(gs48):
    p = Params(1, 1, 0)
    with pytest.raises(ValueError):
        concentration_probe(gs48, V, V, p, (0, 0, 0), [2.0, 50.0])
    zero = potential_function(PotentialSpec("zero"))
    with pytest.raises(ValueError):
        concentration_probe(gs48, zero, zero, p, (0, 0, 0), [1.0, 2.0])


def test_scaling_probe_regimes(gs48):
    a = gs48.a_star
    u1, u2 = compact_pair(G)
    lams = np.geomspace(1, 12, 10)
    hi = Params(0.5 * a, 0.5 * a, 1.5 * thresholds(0.5 * a, 0.5 * a, a).beta_high)
    lo = Params(0.2 * a, 0.2 * a, 0.0)
    assert scaling_probe(u1, u2, V, V, hi, lams).unbounded_below
    assert not scaling_probe(u1, u2, V, V, lo, lams).unbounded_below


def test_scaling_probe_guards():
    u1, u2 = compact_pair(G)
    p = Params(1, 1, 0)
    with pytest.raises(ValueError):
        scaling_probe(u1, u2, V, V, p, [0.5, 1.0])
    with pytest.raises(ValueError):
        scaling_probe(u1, u2, V, V, p, [1.0, 100.0])
    wide = gaussian(G, 3.0)
    with pytest.raises(ValueError):
        scaling_probe(wide, wide, V, V, p, [1.0, 2.0])
