import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_min.grid import (
    Field,
    fft,
    gaussian,
    ifft_real,
    inner_product,
    is_fft_size,
    make_grid,
    normalize_mass,
    sample,
    spectral_inner_product,
)

G = make_grid(32, 10.0)


@pytest.mark.parametrize("n", [16, 24, 32, 48, 64, 96])
def test_accepted_sizes(n):
    assert is_fft_size(n)
    assert make_grid(n, 1.0).n == n


@pytest.mark.parametrize("n", [8, 12, 20, 40, 50, 17])
def test_rejected_sizes(n):
    with pytest.raises(ValueError):
        make_grid(n, 1.0)


@pytest.mark.parametrize("L", [0.0, -1.0, float("inf"), float("nan")])
def test_rejected_box(L):
    with pytest.raises(ValueError):
        make_grid(32, L)


def test_origin_on_lattice():
    X, Y, Z = G.coordinates()
    i = G.origin_index()
    assert X[i] == Y[i] == Z[i] == 0.0
    assert G.radius()[i] == 0.0


def test_field_rejects_bad_samples():
    with pytest.raises(ValueError):
        Field(G, np.zeros((8, 8, 8)))
    bad = np.zeros(G.shape)
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        Field(G, bad)


def test_field_is_immutable():
    u = gaussian(G, 1.0)
    with pytest.raises(ValueError):
        u.values[0, 0, 0] = 1.0


def test_gaussian_mass_and_width():
    u = gaussian(G, 1.0)
    assert u.mass() == pytest.approx(1.0, abs=1e-12)
    # u^2 = pi^{-3/2} exp(-|x|^2), so the peak sample is pi^{-3/4}; the box cuts a tail of ~e^{-25}
    assert u.values[G.origin_index()] == pytest.approx(math.pi ** -0.75, rel=1e-10)


def test_normalize_mass_rejects_zero():
    with pytest.raises(ValueError):
        normalize_mass(Field(G, np.zeros(G.shape)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_normalize_mass_target(seed, target):
    v = np.random.default_rng(seed).normal(size=G.shape)
    assert normalize_mass(Field(G, v), target).mass() == pytest.approx(target, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_parseval(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=G.shape), rng.normal(size=G.shape)
    lhs = inner_product(Field(G, a), Field(G, b))
    rhs = spectral_inner_product(fft(a), fft(b), G)
    assert rhs == pytest.approx(lhs, rel=1e-10, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fft_roundtrip(seed):
    v = np.random.default_rng(seed).normal(size=G.shape)
    np.testing.assert_allclose(ifft_real(fft(v)), v, atol=1e-12)


def test_ifft_real_flags_complex_residue():
    spec = fft(np.ones(G.shape)).copy()
    spec[1, 0, 0] += 1e3j
    with pytest.raises(ArithmeticError):
        ifft_real(spec)


def test_sample_matches_callable():
    u = sample(lambda X, Y, Z: X + 2 * Y - Z, G)
    X, Y, Z = G.coordinates()
    np.testing.assert_array_equal(u.values, X + 2 * Y - Z)


def test_mismatched_grids():
    a = gaussian(G, 1.0)
    b = gaussian(make_grid(32, 12.0), 1.0)
    with pytest.raises(ValueError):
        _ = a + b


def test_sample_rejects_singular_values():
    with pytest.raises(ValueError):
        sample(lambda X, Y, Z: 1 / np.sqrt(X**2 + Y**2 + Z**2), make_grid(16, 4.0))
