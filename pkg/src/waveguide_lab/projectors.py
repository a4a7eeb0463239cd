"""Free propagator and frequency localizers.

All operators here are Fourier multipliers, so they commute with each other
and with ``propagate``. Sharp variants are exact indicators; the smooth
Littlewood-Paley pieces use the bump ``eta_bump`` below.

Bump values (``eta_bump(r)``, equal to 1 for r <= 1 and 0 for r >= 2)::

    r      1.00  1.10      1.25      1.50  1.75      1.90      2.00
    eta    1     0.999862  0.935031  0.5   0.064969  1.379e-04 0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fourier import FreqPoint, GeometryError, SpectralField

# e^{2 pi i z.xi - 4 pi^2 i |xi|^2 t}: the Schrodinger flow in the 2*pi convention
PHASE = 4.0 * math.pi**2


class RangeError(ValueError):
    pass


def propagate(f: SpectralField, t: float) -> SpectralField:
    """``U_lambda(t) f``: multiply every coefficient by ``exp(-4 pi^2 i |xi|^2 t)``."""
    ph = np.exp(-1j * PHASE * f.geometry.xi_sq() * t)
    return SpectralField(f.geometry, f.coeffs * ph)


def _psi(s):
    s = np.asarray(s, float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def eta_bump(r):
    """Smooth even cutoff: 1 on ``|r| <= 1``, 0 on ``|r| >= 2``, C-infinity in between.

    Built from the mollifier profile ``exp(-1/s)`` as a normalized smooth step.
    """
    r = np.abs(np.asarray(r, float))
    a = _psi(2.0 - r)
    b = _psi(r - 1.0)
    return a / (a + b)


def is_dyadic(N) -> bool:
    if N <= 0:
        return False
    e = math.log2(N)
    return abs(e - round(e)) < 1e-12 and round(e) >= 0


def _check_band(f: SpectralField, N):
    if not is_dyadic(N):
        raise RangeError(f"N={N} is not a power of two >= 1")
    if N / 2 >= f.geometry.max_radius():
        raise RangeError(f"band N={N} lies beyond the grid")


def dyadic_multiplier(xi_abs, N, sharp: bool):
    xi_abs = np.asarray(xi_abs, float)
    if sharp:
        return ((xi_abs > N / 2) & (xi_abs <= N)).astype(float)
    return eta_bump(xi_abs / N) - eta_bump(2.0 * xi_abs / N)


def low_multiplier(xi_abs, N, sharp: bool):
    """``P_{<=N}``: sharp disc ``|xi| <= N`` or smooth ``eta(|xi|/N)``."""
    xi_abs = np.asarray(xi_abs, float)
    if sharp:
        return (xi_abs <= N).astype(float)
    return eta_bump(xi_abs / N)


def project_dyadic(f: SpectralField, N, sharp: bool = True) -> SpectralField:
    """Littlewood-Paley piece ``P_N f``.

    Smooth: multiplier ``eta(|xi|/N) - eta(2|xi|/N)``, supported in
    ``N/2 <= |xi| <= 2N``. Sharp: indicator of ``N/2 < |xi| <= N``.
    """
    _check_band(f, N)
    r = np.sqrt(f.geometry.xi_sq())
    return SpectralField(f.geometry, f.coeffs * dyadic_multiplier(r, N, sharp))


def project_low(f: SpectralField, N=1, sharp: bool = True) -> SpectralField:
    r = np.sqrt(f.geometry.xi_sq())
    return SpectralField(f.geometry, f.coeffs * low_multiplier(r, N, sharp))


def littlewood_paley(f: SpectralField, N_max, sharp: bool = True):
    """``{1: P_{<=1} f, 2: P_2 f, ..., N_max: P_{N_max} f}``."""
    out = {1: project_low(f, 1, sharp)}
    N = 2
    while N <= N_max:
        out[N] = project_dyadic(f, N, sharp)
        N *= 2
    return out


# -- angular sectors ----------------------------------------------------------

def angle_distance(a, b):
    """Distance on the circle between angles ``a`` and ``b`` (in ``[0, pi]``)."""
    d = np.mod(np.asarray(a, float) - np.asarray(b, float), 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


@dataclass(frozen=True)
class AngularSector:
    """Sector ``|arg(xi) - l*theta| <= c_sector*theta`` (angles mod 2*pi)."""

    theta: float
    l: int
    c_sector: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ValueError("theta must lie in (0, 1)")
        if self.c_sector <= 0:
            raise ValueError("c_sector must be positive")

    @property
    def center(self) -> float:
        return self.l * self.theta

    @property
    def halfwidth(self) -> float:
        return self.c_sector * self.theta

    def contains(self, mu, eta):
        mu = np.asarray(mu, float)
        eta = np.asarray(eta, float)
        ang = np.arctan2(eta, mu)
        inside = angle_distance(ang, self.center) <= self.halfwidth + 1e-15
        return inside & ((mu != 0) | (eta != 0))


def sector_count(theta: float) -> int:
    return int(math.ceil(2 * math.pi / theta))


def sector_cover(theta: float, c_sector: float = 1.0):
    """Sectors ``l = 0 .. ceil(2 pi/theta) - 1`` covering the circle.

    With ``c_sector = 1`` every direction lies in 2 or 3 sectors.
    """
    return [AngularSector(theta, l, c_sector) for l in range(sector_count(theta))]


def project_sector(f: SpectralField, s: AngularSector) -> SpectralField:
    MU, ETA = f.geometry.freq_mesh()
    return SpectralField(f.geometry, f.coeffs * s.contains(MU, ETA))


def cube_project(f: SpectralField, center: FreqPoint, side: float) -> SpectralField:
    """Sharp restriction to the half-open cube ``center + [-side/2, side/2)^2``."""
    g = f.geometry
    if side < g.dmu:
        raise GeometryError("cube side below the x-frequency spacing")
    MU, ETA = g.freq_mesh()
    h = side / 2.0
    tol = 1e-12 * max(1.0, side)
    m = (
        (MU >= center.mu - h - tol)
        & (MU < center.mu + h - tol)
        & (ETA >= center.eta - h - tol)
        & (ETA < center.eta + h - tol)
    )
    return SpectralField(g, f.coeffs * m)


# -- pair coupling -----------------------------------------------------------

GAP_KINDS = ("diff", "sum", "none")


@dataclass(frozen=True)
class PairConstraint:
    """Indicator attached to a frequency pair ``(xi_1, xi_2)``.

    ``gap_kind='diff'`` means ``|mu_1 - mu_2| >= gap_M``; ``'sum'`` means
    ``|mu_1 + mu_2| >= gap_M``. ``angle_theta`` adds ``|cos angle(xi_1, xi_2)| <= theta``;
    ``sectors`` restricts each factor to one ``AngularSector``.
    """

    gap_M: float = 0.0
    gap_kind: str = "none"
    angle_theta: Optional[float] = None
    sectors: Optional[tuple] = None

    def __post_init__(self):
        if self.gap_kind not in GAP_KINDS:
            raise ValueError(f"gap_kind must be one of {GAP_KINDS}")
        if self.gap_M < 0:
            raise ValueError("gap_M must be nonnegative")

    @property
    def active(self) -> bool:
        return (
            (self.gap_kind != "none" and self.gap_M > 0)
            or self.angle_theta is not None
            or self.sectors is not None
        )

    def weight(self, mu1, eta1, mu2, eta2):
        """0/1 weights for arrays of pairs."""
        mu1, eta1, mu2, eta2 = (np.asarray(a, float) for a in (mu1, eta1, mu2, eta2))
        w = np.ones(np.broadcast(mu1, mu2).shape, bool)
        if self.gap_kind == "diff":
            w &= np.abs(mu1 - mu2) >= self.gap_M
        elif self.gap_kind == "sum":
            w &= np.abs(mu1 + mu2) >= self.gap_M
        if self.angle_theta is not None:
            n1 = np.hypot(mu1, eta1)
            n2 = np.hypot(mu2, eta2)
            den = n1 * n2
            with np.errstate(invalid="ignore", divide="ignore"):
                cos = np.where(den > 0, (mu1 * mu2 + eta1 * eta2) / np.where(den > 0, den, 1.0), 1.0)
            w &= np.abs(cos) <= self.angle_theta
        if self.sectors is not None:
            s1, s2 = self.sectors
            if s1 is not None:
                w &= s1.contains(mu1, eta1)
            if s2 is not None:
                w &= s2.contains(mu2, eta2)
        return w
