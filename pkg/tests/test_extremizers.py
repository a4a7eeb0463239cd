import math

import numpy as np
import pytest

from waveguide_lab import extremizers as ex
from waveguide_lab.bilinear import pair_table
from waveguide_lab.fourier import GeometryError


def test_spec_validation_and_regimes():
    with pytest.raises(ValueError):
        ex.ExtremizerSpec(64, 8, 0.0, 1)
    with pytest.raises(ValueError):
        ex.ExtremizerSpec(8, 64, 0.01, 1)
    with pytest.raises(ValueError):
        ex.ExtremizerSpec(64, 8, 0.5, 1)
    assert ex.ExtremizerSpec(64, 8, 2**-6, 1).regime == "SMALL"
    assert ex.ExtremizerSpec(64, 8, 2**-4, 1).regime == "INTERMEDIATE"
    assert ex.ExtremizerSpec(64, 8, 2**-4, 32).regime == "LARGE"
    assert ex.ExtremizerSpec(64, 8, 2**-4, 32).M == 16


def test_formulas():
    s = ex.ExtremizerSpec(64, 8, 2**-4, 2)
    assert ex.bracket(-3.0) == 4.0
    assert ex.closed_form_norm(s) == pytest.approx(math.sqrt(0.5 * 9 / 2))
    assert ex.lower_bound_formula(s) == pytest.approx(math.sqrt(1 / 128 + 1 / 16) * 0.5 * 9 / 2)


def test_half_length():
    s = ex.ExtremizerSpec(64, 8, 2**-6, 1)
    L = ex.default_half_length(s)
    assert math.log2(L) == int(math.log2(L))
    assert 1 / (2 * L) <= s.N2 * s.theta / 8
    assert L >= 4 * math.pi * s.N1


@pytest.mark.parametrize("s", [ex.ExtremizerSpec(64, 8, 2**-6, 1), ex.ExtremizerSpec(64, 8, 2**-4, 32)])
def test_box_norms_track_closed_form(s):
    p = ex.build_extremizer_pair(s)
    n1, n2 = p.norms()
    c = ex.closed_form_norm(s)
    assert 0.5 <= n1 / c <= 3 and 0.5 <= n2 / c <= 3
    # f2 lies in the N1 band direction, f1 in the N2 band direction
    a, b = p.sparse()
    assert np.all(np.abs(b.mu - s.N1) <= s.N2 * s.theta + 1e-12)
    assert np.all(np.abs(a.eta - s.N2) <= s.N1 * s.theta + 1e-12)


def test_lattice_resolution_errors():
    s = ex.ExtremizerSpec(64, 8, 2**-6, 1)
    with pytest.raises(GeometryError):
        ex.build_extremizer_pair(s, L=4.0)
    with pytest.raises(GeometryError):
        ex.build_extremizer_pair(s, L=16.0)


def test_separable_route_vs_pair_table():
    s = ex.ExtremizerSpec(8, 2, 1 / 16, 4)
    p = ex.build_extremizer_pair(s, L=64.0)
    a, b = p.sparse()
    dense = pair_table(a, b).norm_sq(0.0, 1.0, method="gram")
    sep = ex.product_norm_sq(p, 0.0, 1.0)
    assert sep == pytest.approx(dense, rel=1e-9)


def test_verify_sharpness_row():
    rep = ex.verify_sharpness(ex.ExtremizerSpec(16, 4, 1 / 16, 1))
    row = rep.as_row()
    assert row["regime"] == "SMALL" and row["sharpness"] == 1
    assert 0 < row["ratio"] and row["upper_ratio"] <= 1.0


def test_wave_modulus_at_origin():
    s = ex.ExtremizerSpec(8, 2, 1 / 16, 4)
    p = ex.build_extremizer_pair(s, L=64.0)
    # at the origin every phase is 1: |U f(0,0,0)| = |box| measure
    for which, (j, k) in ((1, (p.j1, p.k1)), (2, (p.j2, p.k2))):
        want = p.cell * j.size * k.size
        assert ex.wave_modulus(p, which, 0.0, 0.0, 0.0) == pytest.approx(want)


def test_stationary_overlap_small():
    d = ex.stationary_overlap_diagnostics(ex.ExtremizerSpec(16, 4, 1 / 32, 1), n=5)
    assert d["regime"] == "SMALL"
    # coherence: the modulus stays a fixed fraction of its peak
    assert d["min_f1"] >= 0.5 * d["origin_f1"]
    assert d["min_f2"] >= 0.5 * d["origin_f2"]
