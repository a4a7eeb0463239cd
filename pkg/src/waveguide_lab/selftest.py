"""Invariant suites for the Fourier layer and the projectors/propagator.

Each check returns a relative error; ``run_selftest`` yields one row per
(check, case) with the tolerance it was held to.
"""

from __future__ import annotations

import math

import numpy as np

from .fourier import SpectralField, WaveguideGeometry, forward_transform, inverse_transform, random_field
from .projectors import (
    eta_bump, littlewood_paley, project_dyadic, project_low, propagate, sector_cover,
)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    d = float(np.sqrt(np.sum(np.abs(a - b) ** 2)))
    s = float(np.sqrt(np.sum(np.abs(b) ** 2)))
    return d / s if s > 0 else d


def plancherel_error(f) -> float:
    F = forward_transform(f)
    return abs(F.norm() ** 2 - f.norm() ** 2) / f.norm() ** 2


def roundtrip_error(f) -> float:
    return _rel(inverse_transform(forward_transform(f)).values, f.values)


def unitarity_error(F: SpectralField, t: float) -> float:
    return abs(propagate(F, t).norm() - F.norm()) / F.norm()


def group_law_error(F: SpectralField, t: float, s: float) -> float:
    return _rel(propagate(propagate(F, s), t).coeffs, propagate(F, t + s).coeffs)


def top_dyadic(g: WaveguideGeometry) -> int:
    """Largest dyadic ``N`` whose band still fits on the grid."""
    N = 1
    while 2 * N / 2 < g.max_radius():
        N *= 2
    return N


def smooth_telescoping_error(F: SpectralField, Nmax) -> float:
    parts = littlewood_paley(F, Nmax, sharp=False)
    tot = sum(p.coeffs for p in parts.values())
    want = F.coeffs * eta_bump(np.sqrt(F.geometry.xi_sq()) / Nmax)
    return _rel(tot, want)


def sharp_partition_error(F: SpectralField, Nmax) -> float:
    parts = littlewood_paley(F, Nmax, sharp=True)
    tot = sum(p.coeffs for p in parts.values())
    return _rel(tot, project_low(F, Nmax, sharp=True).coeffs)


def sector_overlap(g: WaveguideGeometry, theta: float) -> tuple[int, int]:
    """Min and max number of sectors containing a nonzero grid frequency."""
    MU, ETA = g.freq_mesh()
    cnt = sum(s.contains(MU, ETA).astype(int) for s in sector_cover(theta))
    nz = (MU != 0) | (ETA != 0)
    return int(cnt[nz].min()), int(cnt[nz].max())


def commutation_error(F: SpectralField, N, t: float) -> float:
    a = project_dyadic(propagate(F, t), N, sharp=False).coeffs
    b = propagate(project_dyadic(F, N, sharp=False), t).coeffs
    return _rel(a, b)


def run_selftest(cases: int, nx: int, ny: int, lam: float, rng: np.random.Generator,
                 tol: float = 1e-10, unitary_tol: float = 1e-12, projector_every: int = 5):
    """Yield rows ``dict(check, case, value, tol, passed)``.

    The projector checks (several full-grid multipliers each) run on every
    ``projector_every``-th case.
    """
    g = WaveguideGeometry(lam, 8.0 * lam, nx, ny)
    Nmax = top_dyadic(g)

    def row(name, i, v, t):
        return dict(check=name, case=i, value=float(v), tol=float(t), passed=int(v <= t))

    for i in range(cases):
        f = random_field(g, rng)
        F = forward_transform(f)
        t, s = rng.uniform(-2.0, 2.0, size=2)
        N = int(2 ** rng.integers(1, int(math.log2(Nmax)) + 1))
        yield row("plancherel", i, plancherel_error(f), tol)
        yield row("roundtrip", i, roundtrip_error(f), tol)
        yield row("unitarity", i, unitarity_error(F, t), unitary_tol)
        yield row("group_law", i, group_law_error(F, t, s), tol)
        if i % projector_every == 0:
            yield row("commutation", i, commutation_error(F, N, t), tol)
            yield row("lp_smooth_telescoping", i, smooth_telescoping_error(F, Nmax), tol)
            yield row("lp_sharp_partition", i, sharp_partition_error(F, Nmax), tol)
    for i, theta in enumerate((0.5, 0.25, 0.125, 2.0**-4)):
        lo, hi = sector_overlap(g, theta)
        # every direction in 2 or 3 sectors: report the distance from that window
        yield row("sector_cover", i, float(max(2 - lo, hi - 3, 0)), 0.0)
