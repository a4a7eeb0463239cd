"""Constrained bilinear/multilinear forms of free waves and their bound formulas.

A form is expanded into a *tuple table*: every admissible combination of
support points contributes one term ``coef * exp(-i omega t)`` to the
output frequency ``xi = xi_1 + ... + xi_n``. Space-time norms over a time
interval are then evaluated either

* exactly (``method="gram"``): ``int |sum_p c_p e^{-i w_p t}|^2 dt`` is a
  quadratic form in ``c`` with the closed-form kernel of ``e^{-i w t}``, or
* by Gauss-Legendre quadrature in time sized to the phase spread.

The two routes are independent and are cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fourier import GeometryError, PhysicalField, SpectralField, WaveguideGeometry, inverse_transform
from .projectors import PHASE, AngularSector, PairConstraint
from .sparse import SparseSpectrum, box_spectrum

PAIR_BUDGET = 300_000_000
GRAM_BUDGET = 20_000_000

ESTIMATE_IDS = (
    "THM_GLOBAL_BILINEAR",
    "THM_ANGULAR_BILINEAR",
    "PROP_NO_ANGLE",
    "LEM_ONE_ANGLE",
    "LEM_CONJUGATE",
    "MULTILINEAR_D2",
    "L4_STRICHARTZ",
)


class CostError(RuntimeError):
    """The requested pair/tuple sum exceeds the configured budget."""


def k_factor(lam: float, N1: float, N2: float, d: int = 2) -> float:
    """``K(lambda, N1, N2)``: ``1/lambda + N2/N1`` for d=2, ``N2^(d-3)/lambda + N2^(d-1)/N1`` for d>=3."""
    if d < 2:
        raise ValueError(f"unsupported dimension d={d}")
    if d == 2:
        return 1.0 / lam + N2 / N1
    return N2 ** (d - 3) / lam + N2 ** (d - 1) / N1


def _as_sparse(f) -> SparseSpectrum:
    if isinstance(f, SparseSpectrum):
        return f
    if isinstance(f, SpectralField):
        return SparseSpectrum.from_field(f)
    raise TypeError("expected SparseSpectrum or SpectralField")


# -- tuple tables -------------------------------------------------------------

@dataclass
class TupleTable:
    """Terms ``coef * exp(-i omega t)`` attached to output lattice sites ``(j, k)``."""

    lam: float
    dmu: float
    j: np.ndarray
    k: np.ndarray
    omega: np.ndarray
    coef: np.ndarray
    _groups: Optional[tuple] = field(default=None, repr=False)

    @property
    def cell(self) -> float:
        return self.dmu / self.lam

    @property
    def size(self) -> int:
        return int(self.coef.size)

    def groups(self):
        """Sort by output site then omega, merge equal phases, return ``(gid, omega, coef, ngroups)``."""
        if self._groups is None:
            if self.size == 0:
                self._groups = (np.zeros(0, np.int64), np.zeros(0), np.zeros(0, complex), 0)
                return self._groups
            order = np.lexsort((self.omega, self.k, self.j))
            j, k, om, c = self.j[order], self.k[order], self.omega[order], self.coef[order]
            new_site = np.empty(j.size, bool)
            new_site[0] = True
            new_site[1:] = (j[1:] != j[:-1]) | (k[1:] != k[:-1])
            gid = np.cumsum(new_site) - 1
            # merge terms whose phases coincide (up to roundoff) within a site
            tol = 1e-11 * max(1.0, float(np.max(np.abs(om))))
            new_term = new_site.copy()
            new_term[1:] |= np.abs(om[1:] - om[:-1]) > tol
            starts = np.flatnonzero(new_term)
            c = np.add.reduceat(c, starts)
            om = om[starts]
            gid = gid[starts]
            self._groups = (gid, om, c, int(gid[-1]) + 1)
        return self._groups

    def output_sites(self):
        gid, _, _, n = self.groups()
        order = np.lexsort((self.k, self.j))
        j, k = self.j[order], self.k[order]
        keep = np.ones(j.size, bool)
        keep[1:] = (j[1:] != j[:-1]) | (k[1:] != k[:-1])
        return j[keep], k[keep]

    def coefficients(self, t: float) -> SparseSpectrum:
        """Output spectrum ``G(xi, t)`` with ``F(t) = int G e^{2 pi i z.xi} (dxi)_lambda``."""
        gid, om, c, n = self.groups()
        js, ks = self.output_sites()
        z = c * np.exp(-1j * om * t)
        G = np.bincount(gid, weights=z.real, minlength=n) + 1j * np.bincount(gid, weights=z.imag, minlength=n)
        return SparseSpectrum(self.lam, self.dmu, js, ks, G)

    def norm_sq_at(self, t: float) -> float:
        """``||F(t)||^2_{L^2(R x T_lambda)}``."""
        return self.coefficients(t).norm() ** 2

    def gram_cost(self) -> int:
        gid, _, _, n = self.groups()
        sizes = np.bincount(gid, minlength=n).astype(np.int64)
        return int(np.sum(sizes * sizes))

    def phase_spread(self) -> float:
        gid, om, _, n = self.groups()
        if om.size == 0:
            return 0.0
        hi = np.full(n, -np.inf)
        lo = np.full(n, np.inf)
        np.maximum.at(hi, gid, om)
        np.minimum.at(lo, gid, om)
        return float(np.max(hi - lo))

    def norm_sq(self, t0: float = 0.0, t1: float = 1.0, method: str = "auto", nodes: Optional[int] = None) -> float:
        """``int_{t0}^{t1} ||F(t)||^2 dt``."""
        if t1 <= t0:
            raise ValueError("empty time interval")
        if self.size == 0:
            return 0.0
        if method == "auto":
            quad_cost = self.size * self.quadrature_nodes(t0, t1)
            method = "gram" if self.gram_cost() <= min(GRAM_BUDGET, 4 * quad_cost) else "quad"
        if method == "gram":
            return self._norm_sq_gram(t0, t1)
        if method == "quad":
            return self._norm_sq_quad(t0, t1, nodes)
        raise ValueError(f"unknown method {method!r}")

    def quadrature_nodes(self, t0, t1) -> int:
        W = self.phase_spread() * (t1 - t0)
        return int(math.ceil(0.5 * W)) + 48

    def _norm_sq_gram(self, t0, t1) -> float:
        gid, om, c, n = self.groups()
        T = t1 - t0
        tm = 0.5 * (t0 + t1)
        sizes = np.bincount(gid, minlength=n).astype(np.int64)
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        # diagonal part
        total = T * float(np.sum(np.abs(c) ** 2))
        multi = np.flatnonzero(sizes > 1)
        if multi.size == 0:
            return total * self.cell
        sq = sizes[multi] ** 2
        # process groups in chunks bounded by ~4e6 pairs
        bounds = np.concatenate([[0], np.cumsum(sq)])
        i = 0
        while i < multi.size:
            lim = bounds[i] + 4_000_000
            e = max(int(np.searchsorted(bounds, lim, side="right")) - 1, i + 1)
            e = min(e, multi.size)
            g = multi[i:e]
            P = sizes[g]
            P2 = P * P
            rep = np.repeat(np.arange(g.size), P2)
            r = np.arange(int(P2.sum())) - np.repeat(np.cumsum(P2) - P2, P2)
            p = starts[g][rep] + r // P[rep]
            q = starts[g][rep] + r % P[rep]
            off = p != q
            p, q = p[off], q[off]
            w = om[p] - om[q]
            kern = T * np.sinc(w * T / (2 * np.pi)) * np.exp(-1j * w * tm)
            total += float(np.real(np.sum(c[p] * np.conj(c[q]) * kern)))
            i = e
        return max(total, 0.0) * self.cell

    def _norm_sq_quad(self, t0, t1, nodes=None) -> float:
        gid, om, c, n = self.groups()
        # remove a per-site reference phase: |G|^2 does not see it
        lo = np.full(n, np.inf)
        hi = np.full(n, -np.inf)
        np.minimum.at(lo, gid, om)
        np.maximum.at(hi, gid, om)
        om_r = om - 0.5 * (lo + hi)[gid]
        n_nodes = nodes or self.quadrature_nodes(t0, t1)
        x, wq = np.polynomial.legendre.leggauss(n_nodes)
        ts = t0 + 0.5 * (t1 - t0) * (x + 1.0)
        wq = 0.5 * (t1 - t0) * wq
        total = 0.0
        for t, wt in zip(ts, wq):
            z = c * np.exp(-1j * om_r * t)
            gr = np.bincount(gid, weights=z.real, minlength=n)
            gi = np.bincount(gid, weights=z.imag, minlength=n)
            total += wt * float(np.sum(gr * gr + gi * gi))
        return total * self.cell


def _check_lattice(specs):
    lam, dmu = specs[0].lam, specs[0].dmu
    for s in specs[1:]:
        if abs(s.lam - lam) > 1e-12 or abs(s.dmu - dmu) > 1e-15:
            raise GeometryError("factors live on different lattices")
    return lam, dmu


def pair_table(
    f1,
    f2,
    constraint: Optional[PairConstraint] = None,
    conjugate_second: bool = False,
    budget: int = PAIR_BUDGET,
) -> TupleTable:
    """Expand the (constrained) bilinear form into its pair table.

    Output site ``xi_1 + xi_2``; phase ``4 pi^2 (|xi_1|^2 +- |xi_2|^2)``
    (minus for the conjugated second factor); coefficient
    ``cell * fhat_1(xi_1) fhat_2(xi_2)`` times the constraint indicator.
    """
    s1, s2 = _as_sparse(f1), _as_sparse(f2)
    lam, dmu = _check_lattice([s1, s2])
    npairs = s1.size * s2.size
    if npairs > budget:
        raise CostError(f"{npairs} pairs exceed the budget {budget}; band-limit the inputs")
    empty = TupleTable(lam, dmu, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), np.zeros(0, complex))
    if npairs == 0:
        return empty
    chunks = []
    step = max(1, 2_000_000 // max(1, s2.size))
    sgn = -1.0 if conjugate_second else 1.0
    e1, e2 = s1.xi_sq(), s2.xi_sq()
    for a in range(0, s1.size, step):
        sl = slice(a, a + step)
        J1, J2 = np.meshgrid(s1.j[sl], s2.j, indexing="ij")
        K1, K2 = np.meshgrid(s1.k[sl], s2.k, indexing="ij")
        if constraint is not None and constraint.active:
            w = constraint.weight(J1 * dmu, K1 / lam, J2 * dmu, K2 / lam)
        else:
            w = np.ones(J1.shape, bool)
        I1, I2 = np.meshgrid(np.arange(s1.size)[sl], np.arange(s2.size), indexing="ij")
        I1, I2 = I1[w], I2[w]
        chunks.append(
            (
                s1.j[I1] + s2.j[I2],
                s1.k[I1] + s2.k[I2],
                PHASE * (e1[I1] + sgn * e2[I2]),
                s1.cell * s1.c[I1] * s2.c[I2],
            )
        )
    cat = [np.concatenate([ch[i] for ch in chunks]) for i in range(4)]
    return TupleTable(lam, dmu, *cat)


def tuple_table(factors: Sequence, budget: int = PAIR_BUDGET) -> TupleTable:
    """Unconstrained product of several free waves (all unconjugated)."""
    specs = [_as_sparse(f) for f in factors]
    lam, dmu = _check_lattice(specs)
    n = int(np.prod([s.size for s in specs], dtype=np.float64))
    if n > budget:
        raise CostError(f"{n} tuples exceed the budget {budget}")
    s0 = specs[0]
    j, k, om, c = s0.j.copy(), s0.k.copy(), PHASE * s0.xi_sq(), s0.c.astype(complex)
    for s in specs[1:]:
        j = (j[:, None] + s.j[None, :]).ravel()
        k = (k[:, None] + s.k[None, :]).ravel()
        om = (om[:, None] + PHASE * s.xi_sq()[None, :]).ravel()
        c = (c[:, None] * (s.cell * s.c)[None, :]).ravel()
    return TupleTable(lam, dmu, j, k, om, c)


def constrained_bilinear_form(
    f1: SpectralField,
    f2: SpectralField,
    c: Optional[PairConstraint] = None,
    conjugate_second: bool = False,
    t: float = 0.0,
    budget: int = PAIR_BUDGET,
) -> PhysicalField:
    """Physical-side samples of the constrained form at time ``t``.

    Output frequencies are folded onto the grid periodically, which is
    exactly what the pointwise product of two grid functions does.
    """
    g: WaveguideGeometry = f1.geometry
    if f2.geometry != g:
        raise GeometryError("factors live on different geometries")
    tab = pair_table(f1, f2, c, conjugate_second, budget)
    G = tab.coefficients(t)
    out = np.zeros(g.shape, complex)
    a = np.mod(G.j + g.nx // 2, g.nx)
    b = np.mod(G.k + g.ny // 2, g.ny)
    np.add.at(out, (a, b), G.c)
    return inverse_transform(SpectralField(g, out))


# -- reports --------------------------------------------------------------------

@dataclass
class EstimateReport:
    estimate_id: str
    params: dict
    lhs: float
    rhs: float
    ratio: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if self.estimate_id not in ESTIMATE_IDS:
            raise ValueError(f"unknown estimate id {self.estimate_id}")
        if self.rhs > 0:
            self.ratio = self.lhs / self.rhs
        else:
            self.ratio = 0.0
            self.degenerate = True

    def as_row(self) -> dict:
        row = {"estimate_id": self.estimate_id}
        row.update(self.params)
        row.update(lhs=self.lhs, rhs=self.rhs, ratio=self.ratio, degenerate=int(self.degenerate))
        return row


def in_band(s: SparseSpectrum, N: float) -> bool:
    r = np.sqrt(s.xi_sq())
    return bool(np.all((r > N / 2 - 1e-12) & (r <= N + 1e-12)))


def _band_check(f, N, name):
    if not in_band(f, N):
        raise ValueError(f"{name} is not supported in the sharp band N={N}")


def angular_bound(lam, M, theta):
    return math.sqrt(1.0 / (lam * M) + theta)


def no_angle_bound(lam, M, N2):
    return math.sqrt(1.0 / (lam * M) + N2 / M)


def one_angle_bound(lam, M, N1, theta):
    return math.sqrt(1.0 / (lam * M) + N1 * theta / M)


def global_bound(lam, N1, N2, eps, d=2):
    return N2**eps * math.sqrt(k_factor(lam, N1, N2, d))


def default_delta_prime(k: int) -> float:
    return min(1.0 / k, 0.25) - 0.01


def multilinear_bound(bands, norms, k: int, delta_prime: Optional[float] = None) -> float:
    """``(N_{k+1}/N_1 + 1/N_2)^delta' ||phi_1|| prod_{j>=2} N_j^{1-1/k} ||phi_j||`` (d = 2)."""
    if k < 2:
        raise ValueError("k < 2 is unsupported in dimension 2")
    dp = default_delta_prime(k) if delta_prime is None else delta_prime
    s = 1.0 - 1.0 / k
    val = (bands[k] / bands[0] + 1.0 / bands[1]) ** dp * norms[0]
    for Nj, nj in zip(bands[1:], norms[1:]):
        val *= Nj**s * nj
    return val


def eval_angular_bilinear(lam, N1, N2, M, theta, f1, f2, method="auto", check_bands=True, t_interval=(0.0, 1.0)):
    s1, s2 = _as_sparse(f1), _as_sparse(f2)
    if check_bands:
        _band_check(s1, N1, "f1")
        _band_check(s2, N2, "f2")
    c = PairConstraint(gap_M=M, gap_kind="diff", angle_theta=theta)
    lhs = math.sqrt(pair_table(s1, s2, c).norm_sq(*t_interval, method=method))
    rhs = angular_bound(lam, M, theta) * s1.norm() * s2.norm()
    return EstimateReport("THM_ANGULAR_BILINEAR", dict(lam=lam, N1=N1, N2=N2, M=M, theta=theta), lhs, rhs)


def eval_no_angle_bilinear(lam, N1, N2, M, f1, f2, method="auto", check_bands=True):
    s1, s2 = _as_sparse(f1), _as_sparse(f2)
    if check_bands:
        _band_check(s1, N1, "f1")
        _band_check(s2, N2, "f2")
    c = PairConstraint(gap_M=M, gap_kind="diff")
    lhs = math.sqrt(pair_table(s1, s2, c).norm_sq(0.0, 1.0, method=method))
    rhs = no_angle_bound(lam, M, N2) * s1.norm() * s2.norm()
    return EstimateReport("PROP_NO_ANGLE", dict(lam=lam, N1=N1, N2=N2, M=M), lhs, rhs)


def eval_one_angle_bilinear(lam, N1, N2, M, theta, l, f1, f2, c_sector=2.0, method="auto", check_bands=True):
    s1, s2 = _as_sparse(f1), _as_sparse(f2)
    sec = AngularSector(theta, l, c_sector)
    if check_bands:
        _band_check(s1, N1, "f1")
        _band_check(s2, N2, "f2")
    if s2.size and not np.all(sec.contains(s2.mu, s2.eta)):
        raise ValueError("second factor is not supported in the sector")
    c = PairConstraint(gap_M=M, gap_kind="sum")
    lhs = math.sqrt(pair_table(s1, s2, c, conjugate_second=True).norm_sq(0.0, 1.0, method=method))
    rhs = one_angle_bound(lam, M, N1, theta) * s1.norm() * s2.norm()
    return EstimateReport("LEM_ONE_ANGLE", dict(lam=lam, N1=N1, N2=N2, M=M, theta=theta, l=l), lhs, rhs)


def eval_conjugate_bilinear(lam, N1, N2, M, f1, f2, method="auto", check_bands=True):
    """Gap-only form with the second factor conjugated and ``|mu_1 + mu_2| >= M``."""
    s1, s2 = _as_sparse(f1), _as_sparse(f2)
    if check_bands:
        _band_check(s1, N1, "f1")
        _band_check(s2, N2, "f2")
    c = PairConstraint(gap_M=M, gap_kind="sum")
    lhs = math.sqrt(pair_table(s1, s2, c, conjugate_second=True).norm_sq(0.0, 1.0, method=method))
    rhs = no_angle_bound(lam, M, N2) * s1.norm() * s2.norm()
    return EstimateReport("LEM_CONJUGATE", dict(lam=lam, N1=N1, N2=N2, M=M), lhs, rhs)


def eval_global_bilinear(lam, N1, N2, eps, f1, f2, slabs: int = 8, method="auto", check_bands=True):
    """``l^4_gamma L^2`` norm over unit slabs ``[gamma, gamma+1]``, ``gamma = 0..slabs-1``."""
    if N1 < N2:
        raise ValueError("need N1 >= N2")
    s1, s2 = _as_sparse(f1), _as_sparse(f2)
    if check_bands:
        _band_check(s1, N1, "f1")
        _band_check(s2, N2, "f2")
    tab = pair_table(s1, s2)
    per = np.array([tab.norm_sq(g, g + 1.0, method=method) for g in range(slabs)])
    lhs = float(np.sum(per**2) ** 0.25)
    rhs = global_bound(lam, N1, N2, eps) * s1.norm() * s2.norm()
    return EstimateReport(
        "THM_GLOBAL_BILINEAR", dict(lam=lam, N1=N1, N2=N2, eps=eps, slabs=slabs), lhs, rhs
    )


def eval_multilinear_d2(k: int, bands, data, delta_prime=None, method="auto", check_bands=True):
    if k < 2:
        raise ValueError("k < 2 is unsupported in dimension 2")
    bands = list(bands)
    if len(bands) != k + 1 or len(data) != k + 1:
        raise ValueError("need k+1 bands and k+1 factors")
    if any(bands[i] < bands[i + 1] for i in range(k)):
        raise ValueError("bands must be nonincreasing")
    specs = [_as_sparse(f) for f in data]
    if check_bands:
        for i, (s, N) in enumerate(zip(specs, bands)):
            _band_check(s, N, f"factor {i + 1}")
    norms = [s.norm() for s in specs]
    if min(norms) == 0.0:
        lhs = 0.0
    else:
        lhs = math.sqrt(tuple_table(specs).norm_sq(0.0, 1.0, method=method))
    dp = default_delta_prime(k) if delta_prime is None else delta_prime
    rhs = multilinear_bound(bands, norms, k, dp)
    params = {"k": k, "delta_prime": dp}
    params.update({f"N{i + 1}": N for i, N in enumerate(bands)})
    return EstimateReport("MULTILINEAR_D2", params, lhs, rhs)


def eval_l4_strichartz(lam, N, f, method="auto", check_bands=True):
    """``||U f||_{L^4([0,1] x R x T_lambda)} / ||f||`` computed as ``||(Uf)^2||_{L^2}^{1/2}``."""
    s = _as_sparse(f)
    if check_bands:
        _band_check(s, N, "f")
    lhs = pair_table(s, s).norm_sq(0.0, 1.0, method=method) ** 0.25
    return EstimateReport("L4_STRICHARTZ", dict(lam=lam, N=N), lhs, s.norm())


# -- random admissible data ------------------------------------------------------

def sweep_geometry(lam: float, N1: float = 0.0, N2: float = 0.0, T: float = 1.0):
    """Lattice used by sweeps: ``dmu = 1/(2L)`` with ``L`` a power of two.

    ``L >= 8 lambda`` and ``2L >= 4 pi (N1 + N2) T``, so packets moving at
    relative x-speed up to ``4 pi (N1 + N2)`` never wrap around the
    periodization box within the time window.
    """
    need = max(8.0 * lam, 2.0 * math.pi * (N1 + N2) * T)
    L = 2.0 ** math.ceil(math.log2(need))
    return float(lam), 1.0 / (2.0 * L)


def random_box_in_band(lam, dmu, N, center, half_j, half_k, rng):
    """Gaussian coefficients on a lattice box around ``center``, clipped to the sharp band."""
    mu0, eta0 = center
    j0 = int(round(mu0 / dmu))
    k0 = int(round(eta0 * lam))
    s = box_spectrum(
        lam, dmu,
        ((j0 - half_j) * dmu, (j0 + half_j) * dmu),
        ((k0 - half_k) / lam, (k0 + half_k) / lam),
        rng=rng,
    )
    return s.masked((np.sqrt(s.xi_sq()) > N / 2) & (np.sqrt(s.xi_sq()) <= N))


def random_point_in_band(N, rng, angle=None):
    r = N * math.sqrt(rng.uniform(0.25, 1.0))
    a = rng.uniform(0, 2 * math.pi) if angle is None else angle
    return r * math.cos(a), r * math.sin(a)


def admissible_pair(lam, dmu, N1, N2, M, theta, rng, half_j, half_k, tries=400, gap_kind="diff"):
    """Draw band-limited boxes whose centers satisfy the gap and transversality constraints.

    Returns ``None`` when no admissible configuration was found.
    """
    for _ in range(tries):
        p1 = random_point_in_band(N1, rng)
        a1 = math.atan2(p1[1], p1[0])
        a2 = a1 + rng.choice([-1, 1]) * math.pi / 2
        if theta is not None:
            a2 += math.asin(min(1.0, theta) * rng.uniform(-1, 1))
        p2 = random_point_in_band(N2, rng, angle=a2)
        gap = abs(p1[0] - p2[0]) if gap_kind == "diff" else abs(p1[0] + p2[0])
        if gap < M:
            continue
        f1 = random_box_in_band(lam, dmu, N1, p1, half_j, half_k, rng)
        f2 = random_box_in_band(lam, dmu, N2, p2, half_j, half_k, rng)
        if f1.size and f2.size:
            return f1, f2
    return None
