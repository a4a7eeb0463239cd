import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waveguide_lab import bilinear as bl
from waveguide_lab.fourier import GeometryError, WaveguideGeometry, inverse_transform, simpson_weights
from waveguide_lab.projectors import PairConstraint, propagate
from waveguide_lab.sparse import SparseSpectrum, box_spectrum


def boxes(rng, lam=1.0, dmu=1 / 16, n=6):
    f1 = box_spectrum(lam, dmu, (0.5, 0.5 + n * dmu), (1.0, 1.0 + 3 / lam), rng=rng)
    f2 = box_spectrum(lam, dmu, (-1.0, -1.0 + n * dmu), (-2.0, -2.0 + 2 / lam), rng=rng)
    return f1, f2


def test_k_factor():
    assert bl.k_factor(2.0, 16.0, 4.0) == pytest.approx(0.5 + 0.25)
    assert bl.k_factor(2.0, 16.0, 4.0, d=3) == pytest.approx(1 / 2 + 16 / 16)
    with pytest.raises(ValueError):
        bl.k_factor(1.0, 1.0, 1.0, d=1)


def test_pair_table_matches_grid_product():
    # dense oracle: pointwise product of the two evolved grid fields
    g = WaveguideGeometry(1.0, 8.0, 64, 16)
    rng = np.random.default_rng(0)
    f1 = box_spectrum(g.lam, g.dmu, (-0.5, 0.5), (-2.0, 2.0), rng=rng)
    f2 = box_spectrum(g.lam, g.dmu, (0.25, 1.0), (-1.0, 3.0), rng=rng)
    t = 0.37
    out = bl.constrained_bilinear_form(f1.to_field(g), f2.to_field(g), None, t=t)
    u1 = inverse_transform(propagate(f1.to_field(g), t)).values
    u2 = inverse_transform(propagate(f2.to_field(g), t)).values
    assert np.allclose(out.values, u1 * u2, rtol=0, atol=1e-10 * np.abs(u1 * u2).max())


def test_conjugate_pair_table_matches_grid_product():
    g = WaveguideGeometry(1.0, 8.0, 64, 16)
    rng = np.random.default_rng(1)
    f1 = box_spectrum(g.lam, g.dmu, (-0.5, 0.5), (-2.0, 2.0), rng=rng)
    f2 = box_spectrum(g.lam, g.dmu, (0.25, 1.0), (-1.0, 3.0), rng=rng)
    t = -0.21
    out = bl.constrained_bilinear_form(f1.to_field(g), f2.to_field(g), None, conjugate_second=True, t=t)
    # conjugate second: e^{-i w2 t} -> e^{+i w2 t}, coefficient unconjugated
    u1 = inverse_transform(propagate(f1.to_field(g), t)).values
    u2 = inverse_transform(propagate(f2.to_field(g), -t)).values
    assert np.allclose(out.values, u1 * u2, atol=1e-10 * np.abs(u1 * u2).max())


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), t0=st.floats(-2, 2), T=st.floats(0.1, 3))
def test_gram_vs_quadrature(seed, t0, T):
    rng = np.random.default_rng(seed)
    f1, f2 = boxes(rng)
    tab = bl.pair_table(f1, f2)
    a = tab.norm_sq(t0, t0 + T, method="gram")
    b = tab.norm_sq(t0, t0 + T, method="quad")
    assert a == pytest.approx(b, rel=1e-9)


def test_norm_sq_vs_pointwise_simpson():
    rng = np.random.default_rng(2)
    f1, f2 = boxes(rng)
    tab = bl.pair_table(f1, f2)
    n = 4000
    ts = np.linspace(0, 1, n + 1)
    vals = np.array([tab.norm_sq_at(t) for t in ts])
    ref = float(simpson_weights(n, 1 / n) @ vals)
    assert tab.norm_sq(0, 1, method="gram") == pytest.approx(ref, rel=1e-8)


def test_unconstrained_single_pair_norm():
    # one mode each: |F(t)|^2 is constant = cell^2 |c1 c2|^2 on one site
    lam, dmu = 2.0, 1 / 8
    f1 = SparseSpectrum(lam, dmu, [3], [1], [2.0])
    f2 = SparseSpectrum(lam, dmu, [-1], [4], [1j])
    tab = bl.pair_table(f1, f2)
    want = (f1.cell * 2.0) ** 2 * f1.cell
    assert tab.norm_sq(0, 1) == pytest.approx(want)
    assert tab.norm_sq(0, 3) == pytest.approx(3 * want)


def test_constraint_filters_pairs():
    rng = np.random.default_rng(3)
    f1, f2 = boxes(rng)
    full = bl.pair_table(f1, f2)
    c = PairConstraint(gap_M=1.6, gap_kind="diff")
    sub = bl.pair_table(f1, f2, c)
    assert 0 < sub.size < full.size
    mu1 = np.repeat(f1.mu, f2.size)
    mu2 = np.tile(f2.mu, f1.size)
    assert sub.size == int(np.sum(np.abs(mu1 - mu2) >= 1.6))


def test_tuple_table_equals_pair_table():
    rng = np.random.default_rng(4)
    f1, f2 = boxes(rng)
    a = bl.pair_table(f1, f2).norm_sq(0, 1)
    b = bl.tuple_table([f1, f2]).norm_sq(0, 1)
    assert a == pytest.approx(b, rel=1e-12)


def test_budget_and_lattice_errors():
    rng = np.random.default_rng(5)
    f1, f2 = boxes(rng)
    with pytest.raises(bl.CostError):
        bl.pair_table(f1, f2, budget=10)
    g = box_spectrum(2.0, 1 / 16, (0, 0.5), (0, 1), rng=rng)
    with pytest.raises(GeometryError):
        bl.pair_table(f1, g)
    with pytest.raises(ValueError):
        bl.pair_table(f1, f2).norm_sq(1.0, 1.0)


def test_bound_formulas():
    assert bl.angular_bound(2.0, 4.0, 0.125) == pytest.approx(math.sqrt(1 / 8 + 1 / 8))
    assert bl.no_angle_bound(1.0, 4.0, 8.0) == pytest.approx(math.sqrt(0.25 + 2))
    assert bl.one_angle_bound(1.0, 4.0, 16.0, 0.25) == pytest.approx(math.sqrt(0.25 + 1))
    assert bl.global_bound(1.0, 16.0, 4.0, 0.5) == pytest.approx(2 * math.sqrt(1.25))
    v = bl.multilinear_bound([16, 8, 4], [1.0, 2.0, 3.0], 2, delta_prime=0.25)
    assert v == pytest.approx((4 / 16 + 1 / 8) ** 0.25 * 1.0 * 8**0.5 * 2 * 4**0.5 * 3)


def test_band_checks():
    rng = np.random.default_rng(6)
    f1, f2 = boxes(rng)
    with pytest.raises(ValueError):
        bl.eval_angular_bilinear(1.0, 16.0, 4.0, 1.0, 0.1, f1, f2)
    with pytest.raises(ValueError):
        bl.eval_global_bilinear(1.0, 4.0, 16.0, 0.1, f1, f2)
    with pytest.raises(ValueError):
        bl.eval_multilinear_d2(1, [4, 2], [f1, f2])


def test_report_ratio_and_degenerate():
    r = bl.EstimateReport("PROP_NO_ANGLE", {}, 1.0, 4.0)
    assert r.ratio == 0.25 and not r.degenerate
    r = bl.EstimateReport("PROP_NO_ANGLE", {}, 1.0, 0.0)
    assert r.degenerate and r.ratio == 0.0
    with pytest.raises(ValueError):
        bl.EstimateReport("NOPE", {}, 1.0, 1.0)


def test_sweep_geometry():
    for lam, N1, N2 in [(1, 16, 4), (3, 256, 64), (64, 8, 8)]:
        l, dmu = bl.sweep_geometry(lam, N1, N2)
        L = 1 / (2 * dmu)
        assert math.log2(L) == int(math.log2(L))
        assert L >= 8 * lam and 2 * L >= 4 * math.pi * (N1 + N2)


def test_admissible_pair_constraints():
    rng = np.random.default_rng(7)
    lam, dmu = bl.sweep_geometry(2.0, 32.0, 8.0)
    for _ in range(10):
        f1, f2 = bl.admissible_pair(lam, dmu, 32.0, 8.0, 4.0, 0.125, rng, 2, 2)
        assert bl.in_band(f1, 32.0) and bl.in_band(f2, 8.0)
        rep = bl.eval_angular_bilinear(lam, 32.0, 8.0, 4.0, 0.125, f1, f2)
        assert rep.lhs >= 0 and rep.rhs > 0


def test_one_angle_requires_sector():
    rng = np.random.default_rng(8)
    lam, dmu = bl.sweep_geometry(1.0, 16.0, 4.0)
    f1 = bl.random_box_in_band(lam, dmu, 16.0, (12.0, 0.0), 1, 1, rng)
    f2 = bl.random_box_in_band(lam, dmu, 4.0, (0.0, 3.0), 1, 1, rng)
    with pytest.raises(ValueError):
        bl.eval_one_angle_bilinear(lam, 16.0, 4.0, 1.0, 0.125, 0, f1, f2)
    l = int(round((math.pi / 2) / 0.125))
    rep = bl.eval_one_angle_bilinear(lam, 16.0, 4.0, 1.0, 0.125, l, f1, f2)
    assert rep.lhs > 0
