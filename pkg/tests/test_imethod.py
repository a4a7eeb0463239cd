import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waveguide_lab import imethod as im_
from waveguide_lab.fourier import SpectralField, WaveguideGeometry
from waveguide_lab.imethod import IMultiplier


def test_multiplier_values():
    m = IMultiplier(16, 0.6)
    v = m(np.array([0.0, 8.0, 16.0, 32.0, 64.0]))
    assert np.allclose(v[:3], 1.0)
    assert v[3] == pytest.approx((16 / 32) ** 0.4)
    assert v[4] == pytest.approx((16 / 64) ** 0.4)
    assert IMultiplier(math.inf, 0.5)(1e6) == 1.0
    with pytest.raises(ValueError):
        IMultiplier(16, 1.0)
    with pytest.raises(ValueError):
        IMultiplier(16, 0.4)
    with pytest.raises(ValueError):
        IMultiplier(0, 0.6)


@settings(max_examples=50, deadline=None)
@given(N=st.floats(1, 1e3), s=st.floats(0.5, 0.99))
def test_multiplier_monotone_and_bounded(N, s):
    r = np.linspace(0, 10 * N, 2001)
    v = IMultiplier(N, s)(r)
    assert np.all(v <= 1 + 1e-15) and np.all(v > 0)
    assert np.all(np.diff(v) <= 1e-12)


def test_dyadic_of():
    assert np.array_equal(im_.dyadic_of([0.2, 1.0, 1.5, 2.0, 3.0, 1024.0]), [1, 1, 2, 2, 4, 1024])


def test_sigma_check():
    with pytest.raises(im_.ConstraintError):
        im_.lambda4(np.ones((3, 4, 2)), IMultiplier(4, 0.6))
    with pytest.raises(im_.ConstraintError):
        im_.lambda4(np.zeros((3, 5, 2)), IMultiplier(4, 0.6))


def test_symbol_identity():
    # on Sigma_4: |xi1|^2 - |xi2|^2 + |xi3|^2 - |xi4|^2 = 2 xi_12 . xi_14
    rng = np.random.default_rng(0)
    xs = im_.random_sigma4(rng, 10_000)
    lhs = im_.dispersive_symbol(xs)
    rhs = 2 * np.sum((xs[:, 0] + xs[:, 1]) * (xs[:, 0] + xs[:, 3]), axis=-1)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-6)


def test_lambda4_symmetry():
    # swapping the two even legs or the two odd legs keeps Lambda_4 (off the resonant set)
    rng = np.random.default_rng(1)
    im = IMultiplier(8, 0.6)
    xs = im_.random_sigma4(rng, 10_000, 0.5, 64)
    a = im_.lambda4(xs, im, use_S=False)
    b = im_.lambda4(xs[:, [2, 1, 0, 3]], im, use_S=False)
    c = im_.lambda4(xs[:, [0, 3, 2, 1]], im, use_S=False)
    ok = np.abs(im_.dispersive_symbol(xs)) > 1e-6 * np.max(np.sum(xs**2, -1), -1)
    assert np.allclose(a[ok], b[ok]) and np.allclose(a[ok], c[ok])


def test_lambda4_equals_one_at_low_frequency():
    rng = np.random.default_rng(2)
    for N in (4, 32, 256):
        im = IMultiplier(N, 0.6)
        xs = im_.random_sigma4_low(rng, 10_000, N)
        S = im_.indicator_S(xs, im)
        assert S.all()
        assert np.array_equal(im_.lambda4(xs, im), np.ones(10_000))


def test_lambda6_vanishes_at_low_frequency():
    rng = np.random.default_rng(3)
    for N in (4, 32, 256):
        im = IMultiplier(N, 0.6)
        xs = im_.random_sigma6_low(rng, 10_000, N / 3)
        assert np.abs(im_.lambda6(xs, im)).max() <= 1e-12


def test_multiplier_A_vanishes_on_S():
    rng = np.random.default_rng(4)
    im = IMultiplier(8, 0.6)
    xs = im_.random_sigma4(rng, 5000, 0.5, 128)
    S = im_.indicator_S(xs, im)
    A = im_.multiplier_A(xs, im)
    assert np.all(A[S] == 0)
    assert S.any() and (~S).any()
    w = im_.multiplier_A(xs, im, squared=True)
    r = np.hypot(xs[..., 0], xs[..., 1])
    want = im_._signed_sum(im(r) ** 2 * r**2) * ~S
    assert np.allclose(w, want)


def test_pointwise_ratio_calibration():
    # frozen constants: optimized sups at s = 0.6 are 7.19 (lemma) and 2.86 (corollary);
    # both are reached in the transition band N < |xi_j| < 2N
    rng = np.random.default_rng(5)
    im = IMultiplier(16, 0.6)
    xs = im_.random_sigma4(rng, 100_000)
    lr = im_.lemma_ratio(xs, im)
    assert np.all(np.isfinite(lr)) and lr.max() <= 8.0
    assert im_.cor_ratio(xs, im).max() <= 4.0
    x6 = im_.random_sigma6_two_large(rng, 10_000, 16)
    assert im_.lambda6_ratio(x6, im).max() <= 3.0


def _field():
    # support radius 0.6 on a grid where |u|^4 has no aliasing
    g = WaveguideGeometry(2.0, 16.0, 128, 16)
    rng = np.random.default_rng(6)
    MU, ETA = g.freq_mesh()
    R = np.hypot(MU, ETA)
    c = 0.5 * (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) * (R < 0.6)
    return SpectralField(g, c)


def test_energy_routes_agree():
    F = _field()
    for N in (0.3, 0.45, math.inf):
        im = IMultiplier(N, 0.6)
        E0, info = im_.modified_energy_E0(F, im, floor=0)
        brute = info["quadratic"] + im_.QUARTIC_NORM * im_.quartic_bruteforce(F, im, floor=0)
        assert E0 == pytest.approx(brute, rel=1e-10)
        if math.isinf(N):
            assert info["gap"] == 0.0
            assert E0 == pytest.approx(im_.energy_Iu(F)[0], rel=1e-10)
    # the physical-side L^4 norm and the Sigma_4 sum with m-products agree when m = 1
    mp = im_.quartic_bruteforce(F, IMultiplier(math.inf, 0.6), kernel="mprod", floor=0)
    assert im_.QUARTIC_NORM * mp == pytest.approx(im_.potential(F), rel=1e-10)


def test_energy_budget():
    F = _field()
    with pytest.raises(im_.CostError):
        im_.energy_gap(F, IMultiplier(0.3, 0.6), floor=0, budget=10)
    with pytest.raises(im_.CostError):
        im_.quartic_bruteforce(F, IMultiplier(0.3, 0.6), floor=0, budget=10)


def test_kinetic_plane_wave():
    g = WaveguideGeometry(1.0, 8.0, 64, 16)
    c = np.zeros(g.shape, complex)
    a, b = g.index_of(0.5, 1)
    c[a, b] = 1.0
    F = SpectralField(g, c)
    want = 0.5 * im_.KINETIC * (0.25 + 1.0) * g.cell
    assert im_.kinetic(F) == pytest.approx(want)
    assert im_.mass(F) == pytest.approx(g.cell)
