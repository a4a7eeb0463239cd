import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waveguide_lab.fourier import FreqPoint, GeometryError, SpectralField, WaveguideGeometry, forward_transform, random_field
from waveguide_lab.projectors import (
    PHASE, AngularSector, PairConstraint, RangeError, cube_project, eta_bump, is_dyadic,
    littlewood_paley, project_dyadic, project_low, project_sector, propagate, sector_cover,
)
from waveguide_lab import selftest as stt


G = WaveguideGeometry(1.0, 8.0, 128, 32)


def field(seed):
    return forward_transform(random_field(G, np.random.default_rng(seed)))


def test_eta_bump_table():
    r = np.array([0.0, 1.0, 1.1, 1.25, 1.5, 1.75, 1.9, 2.0, 3.0])
    want = [1, 1, 0.999862, 0.935031, 0.5, 0.064969, 1.379e-4, 0, 0]
    assert np.allclose(eta_bump(r), want, atol=2e-6)
    # symmetric profile s -> 1 - s about r = 1.5
    s = np.linspace(1, 2, 41)
    assert np.allclose(eta_bump(s) + eta_bump(3 - s), 1.0, atol=1e-14)


def test_eta_bump_monotone():
    r = np.linspace(0, 3, 2001)
    assert np.all(np.diff(eta_bump(r)) <= 1e-15)


def test_single_mode_phase():
    F = SpectralField(G, np.zeros(G.shape))
    a, b = G.index_of(5 * G.dmu, 3)
    F.coeffs[a, b] = 1.0
    t = 0.37
    xi2 = (5 * G.dmu) ** 2 + (3 / G.lam) ** 2
    assert propagate(F, t).coeffs[a, b] == pytest.approx(np.exp(-1j * 4 * math.pi**2 * xi2 * t), abs=1e-14)
    assert PHASE == pytest.approx(4 * math.pi**2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), t=st.floats(-3, 3), s=st.floats(-3, 3))
def test_unitarity_and_group_law(seed, t, s):
    F = field(seed)
    assert stt.unitarity_error(F, t) < 1e-12
    assert stt.group_law_error(F, t, s) < 1e-10


def test_is_dyadic():
    assert is_dyadic(1) and is_dyadic(64) and not is_dyadic(3) and not is_dyadic(0.5)


def test_band_checks():
    F = field(0)
    with pytest.raises(RangeError):
        project_dyadic(F, 3)
    with pytest.raises(RangeError):
        project_dyadic(F, 2 ** 10)


def test_smooth_support_and_telescoping():
    F = field(1)
    N = 4
    P = project_dyadic(F, N, sharp=False)
    r = np.sqrt(G.xi_sq())
    assert np.all(P.coeffs[(r < N / 2) | (r > 2 * N)] == 0)
    assert stt.smooth_telescoping_error(F, stt.top_dyadic(G)) < 1e-12


def test_sharp_partition_disjoint():
    F = field(2)
    parts = littlewood_paley(F, 8, sharp=True)
    occ = sum((np.abs(p.coeffs) > 0).astype(int) for p in parts.values())
    assert occ.max() == 1
    assert stt.sharp_partition_error(F, 8) == 0.0
    assert stt.sharp_partition_error(F, stt.top_dyadic(G)) == 0.0


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), k=st.integers(1, 3), t=st.floats(-1, 1))
def test_projector_propagator_commute(seed, k, t):
    assert stt.commutation_error(field(seed), 2**k, t) < 1e-13


@pytest.mark.parametrize("theta", [0.5, 0.3, 0.125, 0.05])
def test_sector_cover_overlap(theta):
    lo, hi = stt.sector_overlap(G, theta)
    assert lo >= 2 and hi <= 3


def test_sector_membership():
    s = AngularSector(0.1, 5)  # center 0.5 rad, halfwidth 0.2
    assert s.contains(math.cos(0.6), math.sin(0.6))
    assert not s.contains(math.cos(0.75), math.sin(0.75))
    assert not s.contains(0.0, 0.0)
    # projections by a sector keep only its directions
    F = project_sector(field(3), s)
    MU, ETA = G.freq_mesh()
    assert np.all(F.coeffs[~s.contains(MU, ETA)] == 0)
    with pytest.raises(ValueError):
        AngularSector(1.5, 0)


def test_cube_half_open():
    F = SpectralField(G, np.ones(G.shape))
    c = FreqPoint(0.0, 0, 1.0)
    side = 1.0
    P = cube_project(F, c, side)
    MU, ETA = G.freq_mesh()
    inside = (MU >= -0.5) & (MU < 0.5) & (ETA >= -0.5) & (ETA < 0.5)
    assert np.array_equal(P.coeffs.real.astype(bool), inside)
    with pytest.raises(GeometryError):
        cube_project(F, c, G.dmu / 2)


def test_pair_constraint_weights():
    c = PairConstraint(gap_M=1.0, gap_kind="diff", angle_theta=0.1)
    assert c.active
    w = c.weight([3.0, 3.0, 0.5], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 2.0, 2.0])
    # perpendicular with gap 3 / cos = 3/sqrt(5*9+...) large / gap 0.5 too small
    assert list(w) == [True, False, False]
    assert not PairConstraint().active
    with pytest.raises(ValueError):
        PairConstraint(gap_kind="other")
    s = PairConstraint(gap_M=2.0, gap_kind="sum")
    assert list(s.weight([1.0, 1.5], [0, 0], [-3.5, 1.0], [0, 0])) == [True, True]
