"""Coefficient lists on the frequency lattice without a dense grid.

Sweeps at large ``lambda`` and ``N`` would need grids with billions of
points, while the data under test live on small frequency boxes. A
``SparseSpectrum`` stores just the occupied lattice sites ``(j, k)``; it
shares the lattice ``mu = j*dmu``, ``eta = k/lambda`` with ``SpectralField``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import SpectralField, WaveguideGeometry, GeometryError


@dataclass
class SparseSpectrum:
    lam: float
    dmu: float
    j: np.ndarray
    k: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.j = np.asarray(self.j, dtype=np.int64).ravel()
        self.k = np.asarray(self.k, dtype=np.int64).ravel()
        self.c = np.asarray(self.c, dtype=complex).ravel()
        if not (self.j.size == self.k.size == self.c.size):
            raise GeometryError("index and coefficient arrays differ in length")

    @property
    def cell(self) -> float:
        return self.dmu / self.lam

    @property
    def mu(self) -> np.ndarray:
        return self.j * self.dmu

    @property
    def eta(self) -> np.ndarray:
        return self.k / self.lam

    @property
    def size(self) -> int:
        return int(self.c.size)

    def xi_sq(self) -> np.ndarray:
        return self.mu**2 + self.eta**2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.c) ** 2) * self.cell))

    def scaled(self, a) -> "SparseSpectrum":
        return SparseSpectrum(self.lam, self.dmu, self.j, self.k, self.c * a)

    def masked(self, keep: np.ndarray) -> "SparseSpectrum":
        keep = np.asarray(keep, bool)
        return SparseSpectrum(self.lam, self.dmu, self.j[keep], self.k[keep], self.c[keep])

    def propagate(self, t: float) -> "SparseSpectrum":
        from .projectors import PHASE

        return SparseSpectrum(
            self.lam, self.dmu, self.j, self.k, self.c * np.exp(-1j * PHASE * self.xi_sq() * t)
        )

    @classmethod
    def from_field(cls, F: SpectralField, drop_zeros: bool = True) -> "SparseSpectrum":
        g = F.geometry
        a, b = np.nonzero(F.coeffs) if drop_zeros else np.indices(g.shape).reshape(2, -1)
        return cls(g.lam, g.dmu, a - g.nx // 2, b - g.ny // 2, F.coeffs[a, b])

    def to_field(self, g: WaveguideGeometry) -> SpectralField:
        if abs(g.lam - self.lam) > 1e-12 or abs(g.dmu - self.dmu) > 1e-15:
            raise GeometryError("lattice mismatch")
        a = self.j + g.nx // 2
        b = self.k + g.ny // 2
        if np.any((a < 0) | (a >= g.nx) | (b < 0) | (b >= g.ny)):
            raise GeometryError("sparse support exceeds the grid")
        out = np.zeros(g.shape, complex)
        np.add.at(out, (a, b), self.c)
        return SpectralField(g, out)


def box_spectrum(lam, dmu, mu_range, eta_range, values=None, rng=None) -> SparseSpectrum:
    """Lattice sites in ``mu_range x eta_range`` (closed) with given or random values.

    ``values`` may be a scalar, an array matching the site count, or ``None``
    combined with ``rng`` for unit-variance complex Gaussian entries.
    """
    j0 = int(np.ceil(mu_range[0] / dmu - 1e-9))
    j1 = int(np.floor(mu_range[1] / dmu + 1e-9))
    k0 = int(np.ceil(eta_range[0] * lam - 1e-9))
    k1 = int(np.floor(eta_range[1] * lam + 1e-9))
    jj, kk = np.meshgrid(np.arange(j0, j1 + 1), np.arange(k0, k1 + 1), indexing="ij")
    n = jj.size
    if values is None:
        if rng is None:
            c = np.ones(n, complex)
        else:
            c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    else:
        c = np.broadcast_to(np.asarray(values, complex), (n,)).copy()
    return SparseSpectrum(lam, dmu, jj.ravel(), kk.ravel(), c)
