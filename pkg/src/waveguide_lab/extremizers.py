"""Indicator-spectrum near-extremizers for the angular bilinear estimate.

Both factors have box spectra, so ``U f`` factorizes into an x-part and a
y-part. The product norm then reduces to two 1-D convolutions per time
node, which keeps fine x-lattices affordable::

    ||U f1 U f2 (t)||^2 = cell^3 * Sx(t) * Sy(t)

with ``Sx = sum_j |(a1 * a2)(j)|^2`` for the propagated 1-D coefficient
vectors (and likewise in ``k``). A dense pair-sum cross-check lives in the
tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .bilinear import EstimateReport, angular_bound
from .fourier import GeometryError, WaveguideGeometry
from .projectors import PHASE
from .sparse import SparseSpectrum


def bracket(a: float) -> float:
    """``<a> = 1 + |a|``."""
    return 1.0 + abs(a)


@dataclass(frozen=True)
class ExtremizerSpec:
    N1: float
    N2: float
    theta: float
    lam: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.N1 >= self.N2 >= 1:
            raise ValueError("need N1 >= N2 >= 1")
        if not self.theta < self.N2 / self.N1:
            raise ValueError("extremizers need theta << N2/N1")

    @property
    def regime(self) -> str:
        v = self.lam * self.N1 * self.theta
        if v <= 1.0:
            return "SMALL"
        if v >= 8.0:
            return "LARGE"
        return "INTERMEDIATE"

    @property
    def M(self) -> float:
        return self.N1 / 4.0


def default_half_length(s: ExtremizerSpec, T: float = 1.0) -> float:
    """Periodization half-length free of wrap-around on ``[0, T]``.

    Relative x-velocity of the packets is ``4 pi (N1 + N2 theta)``; the
    lattice must also resolve the narrow boxes (``dmu <= N2 theta/8``).
    """
    w = s.N2 * s.theta
    need = max(8.0 * s.lam, 4 * math.pi * (s.N1 + 2 * w) * T + 8.0 / w, 4.0 / w)
    return float(2 ** math.ceil(math.log2(need)))


@dataclass
class BoxPair:
    """Two box spectra stored as 1-D index ranges (unit coefficients)."""

    lam: float
    dmu: float
    j1: np.ndarray
    k1: np.ndarray
    j2: np.ndarray
    k2: np.ndarray

    @property
    def cell(self) -> float:
        return self.dmu / self.lam

    def norms(self):
        return (
            math.sqrt(self.cell * self.j1.size * self.k1.size),
            math.sqrt(self.cell * self.j2.size * self.k2.size),
        )

    def sparse(self):
        def mk(j, k):
            J, K = np.meshgrid(j, k, indexing="ij")
            return SparseSpectrum(self.lam, self.dmu, J.ravel(), K.ravel(), np.ones(J.size))

        return mk(self.j1, self.k1), mk(self.j2, self.k2)

    def fields(self, g: WaveguideGeometry):
        """Dense indicator fields on ``g`` (which must share the lattice and cover both boxes)."""
        a, b = self.sparse()
        return a.to_field(g), b.to_field(g)


def _irange(lo, hi, step):
    a = int(math.ceil(lo / step - 1e-9))
    b = int(math.floor(hi / step + 1e-9))
    return np.arange(a, b + 1, dtype=np.int64)


def build_extremizer_pair(s: ExtremizerSpec, L: float | None = None) -> BoxPair:
    """Indicator boxes

    ``f1``: ``mu in [-N2 theta, N2 theta]``, ``k/lambda in [N2 - N1 theta, N2 + N1 theta]``;
    ``f2``: ``mu in [N1 - N2 theta, N1 + N2 theta]``, ``k/lambda in [-N1 theta, N1 theta]``.
    """
    L = default_half_length(s) if L is None else float(L)
    if L < 8 * s.lam:
        raise GeometryError("L must be at least 8*lambda")
    dmu = 1.0 / (2 * L)
    w = s.N2 * s.theta
    if dmu > w / 8 + 1e-15:
        raise GeometryError("x-lattice does not resolve the boxes (need dmu <= N2 theta / 8)")
    lam = float(s.lam)
    j1 = _irange(-w, w, dmu)
    k1 = _irange((s.N2 - s.N1 * s.theta) * lam, (s.N2 + s.N1 * s.theta) * lam, 1.0)
    j2 = _irange(s.N1 - w, s.N1 + w, dmu)
    k2 = _irange(-s.N1 * s.theta * lam, s.N1 * s.theta * lam, 1.0)
    if min(j1.size, k1.size, j2.size, k2.size) == 0:
        raise GeometryError("box contains no lattice sites")
    return BoxPair(lam, dmu, j1, k1, j2, k2)


def _phase_range(v):
    s = v**2
    return float(s.max() - s.min())


def product_norm_sq(p: BoxPair, t0=0.0, t1=1.0, nodes: int | None = None) -> float:
    """``int_{t0}^{t1} ||U f1 U f2||^2 dt`` by Gauss-Legendre on the separable form."""
    mu1, mu2 = p.j1 * p.dmu, p.j2 * p.dmu
    e1, e2 = p.k1 / p.lam, p.k2 / p.lam
    W = PHASE * (
        _phase_range(mu1) + _phase_range(mu2) + _phase_range(e1) + _phase_range(e2)
    ) * (t1 - t0)
    n = nodes or int(math.ceil(0.5 * W)) + 64
    x, wq = np.polynomial.legendre.leggauss(n)
    ts = t0 + 0.5 * (t1 - t0) * (x + 1.0)
    wq = 0.5 * (t1 - t0) * wq
    total = 0.0
    m1s, m2s, e1s, e2s = mu1**2, mu2**2, e1**2, e2**2
    for t, w in zip(ts, wq):
        cx = fftconvolve(np.exp(-1j * PHASE * m1s * t), np.exp(-1j * PHASE * m2s * t))
        cy = fftconvolve(np.exp(-1j * PHASE * e1s * t), np.exp(-1j * PHASE * e2s * t))
        total += w * float(np.sum(np.abs(cx) ** 2)) * float(np.sum(np.abs(cy) ** 2))
    return total * p.cell**3


def lower_bound_formula(s: ExtremizerSpec) -> float:
    """``(1/(lambda N1) + theta)^{1/2} lambda^{-1} N2 theta <lambda N1 theta>``."""
    return math.sqrt(1.0 / (s.lam * s.N1) + s.theta) * s.N2 * s.theta * bracket(s.lam * s.N1 * s.theta) / s.lam


def closed_form_norm(s: ExtremizerSpec) -> float:
    """``lambda^{-1/2} (N2 theta)^{1/2} <lambda N1 theta>^{1/2}``."""
    return math.sqrt(s.N2 * s.theta * bracket(s.lam * s.N1 * s.theta) / s.lam)


def verify_sharpness(s: ExtremizerSpec, nt: int | None = None, L: float | None = None) -> EstimateReport:
    """Extremizer product norm against the lower-bound formula (``M = N1/4``)."""
    p = build_extremizer_pair(s, L)
    lhs = math.sqrt(product_norm_sq(p, 0.0, 1.0, nodes=nt))
    n1, n2 = p.norms()
    rhs = lower_bound_formula(s)
    upper = angular_bound(s.lam, s.M, s.theta) * n1 * n2
    params = dict(
        lam=s.lam, N1=s.N1, N2=s.N2, M=s.M, theta=s.theta, regime=s.regime, sharpness=1,
        L=1.0 / (2 * p.dmu), norm1=n1, norm2=n2, upper_ratio=lhs / upper, normalized=lhs / (n1 * n2),
    )
    return EstimateReport("THM_ANGULAR_BILINEAR", params, lhs, rhs)


# -- pointwise diagnostics -----------------------------------------------------

def wave_modulus(p: BoxPair, which: int, x, y, t):
    """``|U f_which(t, x, y)|`` on broadcast arrays (separable evaluation)."""
    j, k = (p.j1, p.k1) if which == 1 else (p.j2, p.k2)
    x, y, t = np.broadcast_arrays(*(np.asarray(a, float) for a in (x, y, t)))
    shp = x.shape
    xf, yf, tf = x.ravel(), y.ravel(), t.ravel()
    mu = j * p.dmu
    eta = k / p.lam
    A = np.zeros(xf.size, complex)
    B = np.zeros(xf.size, complex)
    for a in range(0, xf.size, 256):
        sl = slice(a, a + 256)
        A[sl] = p.dmu * np.exp(2j * np.pi * np.outer(mu, xf[sl]) - 1j * PHASE * np.outer(mu**2, tf[sl])).sum(0)
        B[sl] = np.exp(2j * np.pi * np.outer(eta, yf[sl]) - 1j * PHASE * np.outer(eta**2, tf[sl])).sum(0) / p.lam
    return np.abs(A * B).reshape(shp)


def coherence_box(p: BoxPair, which: int, c: float = 0.5):
    """Space-time region where all phases of ``U f_which`` stay within ``~c`` radians.

    Centered on the packet's group-velocity path ``x = 4 pi mu_c t``,
    ``y = 4 pi eta_c t``. Returns a dict of half-widths and centers.
    """
    j, k = (p.j1, p.k1) if which == 1 else (p.j2, p.k2)
    mu = j * p.dmu
    eta = k / p.lam
    wmu = 0.5 * (mu.max() - mu.min())
    weta = 0.5 * (eta.max() - eta.min())
    muc, etac = 0.5 * (mu.max() + mu.min()), 0.5 * (eta.max() + eta.min())
    hx = c / (2 * math.pi * max(wmu, 1e-300))
    hy = c / (2 * math.pi * weta) if weta > 0 else math.inf
    ht = c / (PHASE * max(wmu, weta, 1e-300) ** 2)
    return dict(hx=hx, hy=hy, ht=ht, vx=4 * math.pi * muc, vy=4 * math.pi * etac)


def stationary_overlap_diagnostics(s: ExtremizerSpec, c: float = 0.5, n: int = 9, shrink: float = 1.0, L=None):
    """Minimum modulus of ``U f_i`` over the coherence boxes versus predicted levels.

    SMALL regime boxes play the role of ``A`` (for ``f1``) and ``B`` (for
    ``f2``, moving with ``x = 4 pi N1 t``); LARGE regime boxes the role of
    ``C`` and ``D``. The y-extent is limited by the data's eta spread; only
    times ``t >= 0`` are sampled.
    """
    p = build_extremizer_pair(s, L)
    out = dict(regime=s.regime)
    level = s.N2 * s.theta / s.lam if s.regime != "LARGE" else s.N1 * s.N2 * s.theta**2 / s.lam
    out["predicted_level"] = level
    for which in (1, 2):
        b = coherence_box(p, which, c * shrink)
        hy = b["hy"] if math.isfinite(b["hy"]) else 0.25 * p.lam
        tt = np.linspace(0.0, b["ht"], n)
        ux = np.linspace(-b["hx"], b["hx"], n)
        uy = np.linspace(-hy, hy, n)
        T, X, Y = np.meshgrid(tt, ux, uy, indexing="ij")
        X = X + b["vx"] * T
        Y = Y + b["vy"] * T
        mod = wave_modulus(p, which, X, Y, T)
        out[f"min_f{which}"] = float(mod.min())
        out[f"origin_f{which}"] = float(wave_modulus(p, which, 0.0, 0.0, 0.0))
        out[f"measure_f{which}"] = p.cell * (p.j1.size * p.k1.size if which == 1 else p.j2.size * p.k2.size)
        out[f"ratio_f{which}"] = out[f"min_f{which}"] / level
    return out
