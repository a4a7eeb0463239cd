"""Semi-discrete Fourier calculus on the waveguide R x T_lambda.

Conventions (used everywhere in the package):

* the x direction is periodized on ``[-L, L)`` with ``nx`` points, so the
  x-frequencies form the lattice ``mu = j * dmu`` with ``dmu = 1 / (2L)``;
* the torus ``T_lambda`` has circumference ``lambda``; its frequencies are
  ``eta = k / lambda`` for integer ``k``;
* the transform carries 2*pi in the phase::

      fhat(mu, eta) = int f(x, y) exp(-2 pi i (x mu + y eta)) dx dy

  and the inverse integrates against the measure ``(dk)_lambda`` which on
  the grid is ``dmu / lambda`` times a plain sum.

With this choice Plancherel reads ``||f||^2 = int |fhat|^2 (dk)_lambda`` and
an on-grid plane wave has a single coefficient of magnitude ``2 L lambda``
(the area of the periodization box).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised when a field does not match its geometry or cannot be represented."""


class IntervalError(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WaveguideGeometry:
    """Discretization of R x T_lambda.

    Parameters
    ----------
    lam : float
        Torus rescaling ``lambda >= 1``.
    x_half_length : float
        ``L``; the x direction lives on ``[-L, L)``. Must satisfy ``L >= 8 lambda``.
    nx : int
        Number of x grid points (power of two).
    ny : int
        Number of y grid points (even). Torus modes are ``-ny/2 <= k < ny/2``.
    """

    lam: float
    x_half_length: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.lam >= 1.0:
            raise GeometryError(f"lambda must be >= 1, got {self.lam}")
        if not self.x_half_length >= 8.0 * self.lam - 1e-12:
            raise GeometryError("x_half_length must be at least 8*lambda")
        if not _is_pow2(int(self.nx)):
            raise GeometryError(f"nx must be a power of two, got {self.nx}")
        if self.ny <= 0 or self.ny % 2:
            raise GeometryError(f"ny must be a positive even integer, got {self.ny}")

    @property
    def L(self) -> float:
        return float(self.x_half_length)

    @property
    def dmu(self) -> float:
        return 1.0 / (2.0 * self.x_half_length)

    @property
    def dx(self) -> float:
        return 2.0 * self.x_half_length / self.nx

    @property
    def dy(self) -> float:
        return self.lam / self.ny

    @property
    def cell(self) -> float:
        """Weight of one frequency cell in ``(dk)_lambda``: ``dmu / lambda``."""
        return self.dmu / self.lam

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def j(self) -> np.ndarray:
        return np.arange(self.nx) - self.nx // 2

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.ny) - self.ny // 2

    @property
    def mu(self) -> np.ndarray:
        return self.j * self.dmu

    @property
    def eta(self) -> np.ndarray:
        return self.k / self.lam

    @property
    def x(self) -> np.ndarray:
        return -self.x_half_length + np.arange(self.nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    def freq_mesh(self):
        """Return ``(MU, ETA)`` arrays of shape ``(nx, ny)``."""
        return np.meshgrid(self.mu, self.eta, indexing="ij")

    def xi_sq(self) -> np.ndarray:
        MU, ETA = self.freq_mesh()
        return MU * MU + ETA * ETA

    def max_radius(self) -> float:
        return float(np.hypot(self.nx // 2 * self.dmu, (self.ny // 2) / self.lam))

    def index_of(self, mu: float, k: int) -> tuple[int, int]:
        """Array index of the on-grid frequency ``(mu, k/lambda)``."""
        jj = int(round(mu / self.dmu))
        if abs(jj * self.dmu - mu) > 1e-9 * max(1.0, abs(mu)):
            raise GeometryError(f"mu={mu} is not on the x-frequency lattice")
        a, b = jj + self.nx // 2, int(k) + self.ny // 2
        if not (0 <= a < self.nx and 0 <= b < self.ny):
            raise GeometryError("frequency outside the grid")
        return a, b


@dataclass(frozen=True)
class FreqPoint:
    """A frequency ``xi = (mu, eta)`` with ``eta = k / lambda``."""

    mu: float
    k: int
    lam: float

    def __post_init__(self):
        if abs(self.k - round(self.k)) > 1e-12:
            raise GeometryError("eta * lambda must be an integer")

    @classmethod
    def from_eta(cls, mu: float, eta: float, lam: float) -> "FreqPoint":
        kk = eta * lam
        if abs(kk - round(kk)) > 1e-12 * max(1.0, abs(kk)):
            raise GeometryError(f"eta={eta} is not on the lattice (1/{lam})Z")
        return cls(float(mu), int(round(kk)), float(lam))

    @property
    def eta(self) -> float:
        return self.k / self.lam

    @property
    def norm(self) -> float:
        return float(np.hypot(self.mu, self.eta))


@dataclass
class SpectralField:
    """Coefficients ``fhat`` on the full frequency grid, centered ordering."""

    geometry: WaveguideGeometry
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.geometry.shape:
            raise GeometryError(
                f"coefficient array {self.coeffs.shape} does not match grid {self.geometry.shape}"
            )

    def norm(self) -> float:
        return float(np.sqrt(lambda_measure_integrate(np.abs(self.coeffs) ** 2, self.geometry)))

    def copy(self) -> "SpectralField":
        return SpectralField(self.geometry, self.coeffs.copy())

    def __add__(self, other):
        _same_geometry(self.geometry, other.geometry)
        return SpectralField(self.geometry, self.coeffs + other.coeffs)

    def __mul__(self, a):
        return SpectralField(self.geometry, self.coeffs * a)

    __rmul__ = __mul__


@dataclass
class PhysicalField:
    """Samples ``f(x_a, y_b)`` on the physical grid."""

    geometry: WaveguideGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.geometry.shape:
            raise GeometryError(
                f"value array {self.values.shape} does not match grid {self.geometry.shape}"
            )

    def norm(self) -> float:
        g = self.geometry
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * g.dx * g.dy))

    def lp_norm(self, p: float) -> float:
        g = self.geometry
        return float((np.sum(np.abs(self.values) ** p) * g.dx * g.dy) ** (1.0 / p))


def _same_geometry(a: WaveguideGeometry, b: WaveguideGeometry):
    if a != b:
        raise GeometryError("fields live on different geometries")


def _sign(nx: int) -> np.ndarray:
    # (-1)^j from shifting the x origin to -L
    j = np.arange(nx) - nx // 2
    return np.where(j % 2 == 0, 1.0, -1.0)


def forward_transform(f: PhysicalField) -> SpectralField:
    """Physical samples to frequency coefficients (2*pi phase convention)."""
    g = f.geometry
    if f.values.shape != g.shape:
        raise GeometryError("grid dimensions do not match geometry")
    F = np.fft.fftshift(np.fft.fft2(f.values))
    F *= (g.dx * g.dy) * _sign(g.nx)[:, None]
    return SpectralField(g, F)


def inverse_transform(F: SpectralField) -> PhysicalField:
    """Frequency coefficients back to physical samples."""
    g = F.geometry
    if F.coeffs.shape != g.shape:
        raise GeometryError("grid dimensions do not match geometry")
    c = F.coeffs * _sign(g.nx)[:, None]
    v = np.fft.ifft2(np.fft.ifftshift(c)) / (g.dx * g.dy)
    return PhysicalField(g, v)


def lambda_measure_integrate(a: np.ndarray, geometry: WaveguideGeometry) -> float:
    """``int a (dk)_lambda`` on the grid: ``dmu * (1/lambda) * sum(a)``.

    numpy's sum is pairwise, so the result does not depend on thread count.
    """
    a = np.asarray(a)
    if a.shape != geometry.shape:
        raise GeometryError("samples must cover the full frequency grid")
    return float(np.real(np.sum(a)) * geometry.cell)


def simpson_weights(n_intervals: int, h: float) -> np.ndarray:
    if n_intervals % 2:
        raise IntervalError("composite Simpson needs an even number of intervals")
    w = np.ones(n_intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def l2_spacetime_norm(
    u: Callable[[float], PhysicalField] | Sequence[PhysicalField],
    interval: tuple[float, float],
    nt: int,
) -> float:
    """``(int_{t0}^{t1} ||u(t)||^2 dt)^{1/2}`` by composite Simpson.

    ``u`` may be a callable of time or a sequence of ``nt + 1`` equispaced
    snapshots (``nt`` even). Odd ``nt`` is rounded up for callables.
    """
    t0, t1 = float(interval[0]), float(interval[1])
    if not t1 > t0:
        raise IntervalError(f"empty time interval [{t0}, {t1}]")
    if nt < 16:
        raise IntervalError("nt must be at least 16")
    if callable(u):
        nt = nt + (nt % 2)
        ts = np.linspace(t0, t1, nt + 1)
        sq = np.array([u(t).norm() ** 2 for t in ts])
    else:
        snaps = list(u)
        if len(snaps) != nt + 1:
            raise IntervalError("expected nt+1 snapshots")
        sq = np.array([s.norm() ** 2 for s in snaps])
    w = simpson_weights(nt, (t1 - t0) / nt)
    return float(np.sqrt(max(np.dot(w, sq), 0.0)))


def plane_wave(geometry: WaveguideGeometry, mu0: float, k0: int) -> PhysicalField:
    X, Y = np.meshgrid(geometry.x, geometry.y, indexing="ij")
    return PhysicalField(geometry, np.exp(2j * np.pi * (mu0 * X + k0 * Y / geometry.lam)))


def random_field(geometry: WaveguideGeometry, rng: np.random.Generator) -> PhysicalField:
    v = rng.standard_normal(geometry.shape) + 1j * rng.standard_normal(geometry.shape)
    return PhysicalField(geometry, v)


# -- serialization ----------------------------------------------------------

_MAGIC = b"WGF1"
_HEADER = struct.Struct("<4sddII")


def write_field(path, F: SpectralField) -> None:
    """Binary container: little-endian ``(magic, lambda, L, nx, ny)`` then complex64 row-major."""
    g = F.geometry
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, g.lam, g.x_half_length, g.nx, g.ny))
        fh.write(np.ascontiguousarray(F.coeffs, dtype="<c8").tobytes(order="C"))


def read_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, lam, L, nx, ny = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise GeometryError("not a field container")
    g = WaveguideGeometry(lam, L, nx, ny)
    body = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size)
    if body.size != nx * ny:
        raise GeometryError("truncated field container")
    return SpectralField(g, body.reshape(nx, ny).astype(complex))


def dump_field_csv(path, F: SpectralField, nonzero_only: bool = True) -> None:
    """Debug dump with columns ``index, mu, k, re, im``."""
    g = F.geometry
    c = F.coeffs.ravel()
    mu = np.repeat(g.mu, g.ny)
    kk = np.tile(g.k, g.nx)
    idx = np.arange(c.size)
    if nonzero_only:
        keep = c != 0
        idx, mu, kk, c = idx[keep], mu[keep], kk[keep], c[keep]
    with open(path, "w") as fh:
        fh.write("index,mu,k,re,im\n")
        for i, m, k_, z in zip(idx, mu, kk, c):
            fh.write(f"{i},{m:.17g},{k_},{z.real:.17g},{z.imag:.17g}\n")
