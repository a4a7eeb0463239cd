"""I-operator multipliers and the modified energy.

Frequency tuples are arrays of shape ``(..., k, 2)`` holding ``(mu, eta)``
rows; Sigma_k tuples sum to zero. Energies use the ``2 pi`` transform
convention of the rest of the package, so ``|grad u|^2`` pairs with
``4 pi^2 |xi|^2 |u_hat|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import SpectralField, inverse_transform
from .projectors import eta_bump

KINETIC = 4.0 * math.pi**2
# quartic normalization matching  int |u|^4 = sum over Sigma_4 (cell^3) in this convention
QUARTIC_NORM = 0.25
SIGMA_TOL = 1e-9
DEN_FLOOR = 1e-9


class ConstraintError(ValueError):
    pass


class CostError(RuntimeError):
    pass


@dataclass(frozen=True)
class IMultiplier:
    """``m = 1`` on ``|xi| <= N``, ``(N/|xi|)^(1-s)`` on ``|xi| >= 2N``.

    ``small_factor`` fixes the ``max |xi_j| << N`` branch of the resonant set
    to ``max |xi_j| <= small_factor*N``. ``N = inf`` gives ``m = 1``.
    """

    N: float
    s: float
    small_factor: float = 1.0

    def __post_init__(self):
        if not (0.5 <= self.s < 1.0):
            raise ValueError("s must lie in [1/2, 1)")
        if not self.N > 0:
            raise ValueError("N must be positive")
        if not (0 < self.small_factor <= 1.0):
            raise ValueError("small_factor must lie in (0, 1]")

    def __call__(self, r):
        r = np.abs(np.asarray(r, float))
        if math.isinf(self.N):
            return np.ones_like(r)
        with np.errstate(divide="ignore"):
            tail = np.where(r > 0, (self.N / np.where(r > 0, r, 1.0)) ** (1.0 - self.s), 1.0)
        chi = 1.0 - eta_bump(r / self.N)
        return 1.0 - chi * (1.0 - np.minimum(tail, 1.0))


def m_xi(xi, im: IMultiplier) -> float:
    """``m`` at a ``FreqPoint``."""
    return float(im(xi.norm))


def dyadic_of(r):
    """Dyadic magnitude ``N_j >= 1`` with ``N_j/2 < |xi_j| <= N_j``."""
    r = np.maximum(np.asarray(r, float), 1.0)
    return 2.0 ** np.ceil(np.log2(r) - 1e-12)


def _check_sigma(xs, k):
    xs = np.asarray(xs, float)
    if xs.shape[-2:] != (k, 2):
        raise ConstraintError(f"expected tuples of shape (..., {k}, 2)")
    tot = np.abs(xs.sum(axis=-2)).max(axis=-1)
    scale = np.maximum(1.0, np.abs(xs).max(axis=(-1, -2)))
    if np.any(tot > SIGMA_TOL * scale):
        raise ConstraintError(f"tuple does not lie on Sigma_{k}")
    return xs


def _norms(xs):
    return np.hypot(xs[..., 0], xs[..., 1])


def angle_cos(a, b):
    """``cos`` of the angle between vectors; NaN where either vanishes."""
    na, nb = _norms(a), _norms(b)
    den = na * nb
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.sum(a * b, axis=-1) / den
    return np.where(den > 0, c, np.nan)


def dispersive_symbol(xs):
    """``|xi_1|^2 - |xi_2|^2 + |xi_3|^2 - |xi_4|^2``."""
    r2 = np.sum(xs**2, axis=-1)
    return r2[..., 0] - r2[..., 1] + r2[..., 2] - r2[..., 3]


def indicator_S(xs, im: IMultiplier, check: bool = True):
    """Resonant-set indicator on Sigma_4 tuples."""
    xs = _check_sigma(xs, 4) if check else np.asarray(xs, float)
    r = _norms(xs)
    small = r.max(axis=-1) <= im.small_factor * im.N
    c = angle_cos(xs[..., 0, :] + xs[..., 1, :], xs[..., 0, :] + xs[..., 3, :])
    Nmax = dyadic_of(r).max(axis=-1)
    with np.errstate(invalid="ignore"):
        ang = np.abs(c) >= 1.0 / Nmax - 1e-12
    return small | (ang & ~np.isnan(c))


def _signed_sum(w):
    return w[..., 0] - w[..., 1] + w[..., 2] - w[..., 3]


def lambda4(xs, im: IMultiplier, use_S: bool = True, check: bool = True):
    """``Lambda_4``: the ``m^2``-weighted symbol over the plain symbol, times ``1_S``.

    Where every ``|xi_j| <= N`` the quotient is exactly 1. Elsewhere a
    vanishing denominator (below ``DEN_FLOOR`` relative) gives 0.
    """
    xs = _check_sigma(xs, 4) if check else np.asarray(xs, float)
    r = _norms(xs)
    r2 = r**2
    num = _signed_sum(im(r) ** 2 * r2)
    den = _signed_sum(r2)
    low = r.max(axis=-1) <= im.N
    scale = np.maximum(1.0, r2.max(axis=-1))
    tiny = np.abs(den) < DEN_FLOOR * scale
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(low, 1.0, np.where(tiny, 0.0, num / np.where(tiny, 1.0, den)))
    if use_S:
        q = q * indicator_S(xs, im, check=False)
    return q


def multiplier_A(xs, im: IMultiplier, squared: bool = False, check: bool = True):
    """``(m|xi_1|^2 - m|xi_2|^2 + m|xi_3|^2 - m|xi_4|^2) 1_{S^c}``.

    ``squared=True`` uses ``m^2`` in place of ``m``.
    """
    xs = _check_sigma(xs, 4) if check else np.asarray(xs, float)
    r = _norms(xs)
    m = im(r)
    w = (m**2 if squared else m) * r**2
    return _signed_sum(w) * ~indicator_S(xs, im, check=False)


def lambda6(xs, im: IMultiplier, check: bool = True):
    """Alternating four-term combination of ``Lambda_4`` on Sigma_6."""
    xs = _check_sigma(xs, 6) if check else np.asarray(xs, float)
    x = [xs[..., i, :] for i in range(6)]

    def L4(a, b, c, d):
        return lambda4(np.stack([a, b, c, d], axis=-2), im, check=False)

    return (
        L4(x[0] + x[1] + x[2], x[3], x[4], x[5])
        - L4(x[0], x[1] + x[2] + x[3], x[4], x[5])
        + L4(x[0], x[1], x[2] + x[3] + x[4], x[5])
        - L4(x[0], x[1], x[2], x[3] + x[4] + x[5])
    )


# -- pointwise bound ratios ---------------------------------------------------

def lemma_ratio(xs, im: IMultiplier):
    """``|m^2-weighted symbol| / (min_j m(xi_j)^2 |xi_12| |xi_14|)``."""
    xs = _check_sigma(xs, 4)
    r = _norms(xs)
    num = np.abs(_signed_sum(im(r) ** 2 * r**2))
    a = _norms(xs[..., 0, :] + xs[..., 1, :]) * _norms(xs[..., 0, :] + xs[..., 3, :])
    den = im(r).min(axis=-1) ** 2 * a
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 1e-9, np.inf, 0.0))


def cor_ratio(xs, im: IMultiplier):
    """``|Lambda_4| / (N_1 min_j m(N_j)^2)`` with ``N_1`` the largest dyadic magnitude."""
    xs = _check_sigma(xs, 4)
    Nj = dyadic_of(_norms(xs))
    bound = Nj.max(axis=-1) * im(Nj).min(axis=-1) ** 2
    return np.abs(lambda4(xs, im, check=False)) / bound


def lambda6_ratio(xs, im: IMultiplier):
    """``|Lambda_6| / (max_j m(xi_j)^2 N_3)`` with ``N_3`` the third-largest dyadic magnitude."""
    xs = _check_sigma(xs, 6)
    r = _norms(xs)
    N3 = np.sort(dyadic_of(r), axis=-1)[..., -3]
    bound = im(r).max(axis=-1) ** 2 * N3
    return np.abs(lambda6(xs, im, check=False)) / bound


# -- samplers -----------------------------------------------------------------

def _random_vectors(rng, n, rmin, rmax):
    r = np.exp(rng.uniform(np.log(rmin), np.log(rmax), n))
    a = rng.uniform(0, 2 * np.pi, n)
    return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)


def random_sigma4(rng, n, rmin=0.5, rmax=1024.0):
    """Sigma_4 tuples with log-uniform magnitudes for three legs."""
    v = [_random_vectors(rng, n, rmin, rmax) for _ in range(3)]
    v.append(-(v[0] + v[1] + v[2]))
    return np.stack(v, axis=-2)


def random_sigma4_low(rng, n, rmax):
    """Sigma_4 tuples with every ``|xi_j| <= rmax`` (rejection sampled)."""
    out = []
    got = 0
    while got < n:
        v = [_random_vectors(rng, 4 * n, 1e-3 * rmax, rmax) for _ in range(3)]
        v.append(-(v[0] + v[1] + v[2]))
        xs = np.stack(v, axis=-2)
        ok = _norms(xs).max(axis=-1) <= rmax
        out.append(xs[ok])
        got += int(ok.sum())
    return np.concatenate(out)[:n]


def random_sigma6_low(rng, n, rmax):
    """Sigma_6 tuples with every ``|xi_j| <= rmax``."""
    out = []
    got = 0
    while got < n:
        v = [_random_vectors(rng, 4 * n, 1e-3 * rmax, rmax) for _ in range(5)]
        v.append(-sum(v))
        xs = np.stack(v, axis=-2)
        ok = _norms(xs).max(axis=-1) <= rmax
        out.append(xs[ok])
        got += int(ok.sum())
    return np.concatenate(out)[:n]


def random_sigma6_two_large(rng, n, N):
    """``|xi_1| ~ |xi_2| >= N`` and the other four legs below ``N/16``."""
    small = [_random_vectors(rng, n, 1e-2 * N, N / 64) for _ in range(4)]
    big = _random_vectors(rng, n, N, 16 * N)
    x1 = big
    x2 = -(big + sum(small))
    return np.stack([x1, x2] + small, axis=-2)


# -- energies -------------------------------------------------------------------

def _xi_sq(F: SpectralField):
    return F.geometry.xi_sq()


def apply_I(F: SpectralField, im: IMultiplier) -> SpectralField:
    return SpectralField(F.geometry, F.coeffs * im(np.sqrt(_xi_sq(F))))


def kinetic(F: SpectralField, im: IMultiplier | None = None) -> float:
    """``(1/2) ||I u||_{H^1 dot}^2`` by frequency quadrature."""
    w = _xi_sq(F)
    if im is not None:
        w = w * im(np.sqrt(w)) ** 2
    return 0.5 * KINETIC * float(np.sum(w * np.abs(F.coeffs) ** 2)) * F.geometry.cell


def potential(F: SpectralField, im: IMultiplier | None = None) -> float:
    """``(1/4) ||I u||_{L^4}^4`` by physical quadrature."""
    G = apply_I(F, im) if im is not None else F
    v = inverse_transform(G).values
    g = F.geometry
    return 0.25 * float(np.sum(np.abs(v) ** 4)) * g.dx * g.dy


def mass(F: SpectralField) -> float:
    return F.norm() ** 2


def energy_Iu(F: SpectralField, im: IMultiplier | None = None):
    """``(E(Iu), mass(u))``."""
    return kinetic(F, im) + potential(F, im), mass(F)


# -- modified energy -------------------------------------------------------------

@dataclass
class QuarticSupport:
    """Truncated coefficient list with ``u_hat`` and ``(conj u)^ `` values."""

    j: np.ndarray
    k: np.ndarray
    c: np.ndarray
    dmu: float
    lam: float
    dropped_l1: float

    @property
    def xi(self):
        return np.stack([self.j * self.dmu, self.k / self.lam], axis=-1)


def quartic_support(F: SpectralField, floor: float = 1e-7) -> QuarticSupport:
    g = F.geometry
    a = np.abs(F.coeffs)
    keep = (a > 0) & (a >= floor * a.max())
    ii, kk = np.nonzero(keep)
    return QuarticSupport(
        ii - g.nx // 2, kk - g.ny // 2, F.coeffs[ii, kk], g.dmu, g.lam,
        float(a[~keep].sum()) * g.cell,
    )


class _Lookup:
    """Vectorized ``(j, k) -> value`` lookup, 0 when absent."""

    def __init__(self, j, k, v):
        self.off = int(max(1, np.abs(k).max() + 1)) if k.size else 1
        key = j * (2 * self.off + 1) + k
        order = np.argsort(key)
        self.key = key[order]
        self.v = v[order]

    def __call__(self, j, k):
        key = j * (2 * self.off + 1) + k
        out = np.zeros(key.shape, complex)
        inr = np.abs(k) < self.off
        pos = np.searchsorted(self.key, key)
        pos = np.minimum(pos, self.key.size - 1)
        hit = inr & (self.key[pos] == key) if self.key.size else np.zeros(key.shape, bool)
        out[hit] = self.v[pos[hit]]
        return out


def _slots(sup: QuarticSupport):
    # position 0, 2 carry u_hat(xi); positions 1, 3 carry (conj u)^(xi) = conj(u_hat(-xi))
    P = (sup.j, sup.k, sup.c)
    Q = (-sup.j, -sup.k, np.conj(sup.c))
    return [P, Q, P, Q]


def _tuple_xi(j, k, sup):
    return np.stack([j * sup.dmu, k / sup.lam], axis=-1)


def quartic_bruteforce(F: SpectralField, im: IMultiplier, use_S: bool = True,
                       kernel: str = "lambda4", floor: float = 1e-7, budget: float = 2e8) -> float:
    """``sum_{Sigma_4} K u^ (conj u)^ u^ (conj u)^ cell^3`` by direct triple enumeration.

    ``kernel`` is ``'lambda4'`` or ``'mprod'`` (``m_1 m_2 m_3 m_4``). No
    periodic folding: the fourth frequency must lie in the support.
    """
    sup = quartic_support(F, floor)
    n = sup.c.size
    if float(n) ** 3 > budget:
        raise CostError(f"{n}^3 triples exceed the budget {budget:g}")
    slots = _slots(sup)
    look3 = _Lookup(*slots[3])
    j0, k0, c0 = slots[0]
    j1, k1, c1 = slots[1]
    j2, k2, c2 = slots[2]
    J1, J2 = np.meshgrid(j1, j2, indexing="ij")
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    C12 = np.outer(c1, c2)
    total = 0.0 + 0.0j
    for a in range(n):
        J3 = -(j0[a] + J1 + J2)
        K3 = -(k0[a] + K1 + K2)
        c3 = look3(J3, K3)
        hit = c3 != 0
        if not hit.any():
            continue
        xs = np.stack([
            np.broadcast_to(_tuple_xi(j0[a], k0[a], sup), J1.shape + (2,))[hit],
            _tuple_xi(J1, K1, sup)[hit],
            _tuple_xi(J2, K2, sup)[hit],
            _tuple_xi(J3, K3, sup)[hit],
        ], axis=-2)
        if kernel == "lambda4":
            K = lambda4(xs, im, use_S=use_S, check=False)
        else:
            K = np.prod(im(_norms(xs)), axis=-1)
        total += c0[a] * np.sum(K * C12[hit] * c3[hit])
    cell = sup.dmu / sup.lam
    return float(total.real) * cell**3


def energy_gap(F: SpectralField, im: IMultiplier, floor: float = 1e-7, budget: float = 2e8):
    """``E(Iu) - E_0(u)`` as a sum over Sigma_4 tuples touching ``|xi| > N``.

    The kernel ``m_1 m_2 m_3 m_4 - Lambda_4`` vanishes when all four legs lie
    in ``|xi| <= N``, so only tuples with a high leg are enumerated. Each
    tuple is counted once, at its first high position. Returns
    ``(gap, info)``.
    """
    sup = quartic_support(F, floor)
    cell = sup.dmu / sup.lam
    info = dict(support=int(sup.c.size), dropped_l1=sup.dropped_l1, tuples=0)
    if math.isinf(im.N) or sup.c.size == 0:
        return 0.0, info
    slots = _slots(sup)
    high = [np.hypot(s[0] * sup.dmu, s[1] / sup.lam) > im.N for s in slots]
    nH = int(high[0].sum())
    n = sup.c.size
    cost = 4.0 * nH * n * n
    if cost > budget:
        raise CostError(f"{cost:g} tuples exceed the budget {budget:g}")
    total = 0.0 + 0.0j
    kmax = 0.0
    for i in range(4):
        others = [p for p in range(4) if p != i]
        d = others[-1]
        f1, f2 = others[0], others[1]
        look = _Lookup(*slots[d])
        jf1, kf1, cf1 = slots[f1]
        jf2, kf2, cf2 = slots[f2]
        m1 = ~high[f1] if f1 < i else np.ones(n, bool)
        m2 = ~high[f2] if f2 < i else np.ones(n, bool)
        jf1, kf1, cf1 = jf1[m1], kf1[m1], cf1[m1]
        jf2, kf2, cf2 = jf2[m2], kf2[m2], cf2[m2]
        A1, A2 = np.meshgrid(jf1, jf2, indexing="ij")
        B1, B2 = np.meshgrid(kf1, kf2, indexing="ij")
        C12 = np.outer(cf1, cf2)
        ji, ki, ci = slots[i]
        for a in np.nonzero(high[i])[0]:
            Jd = -(ji[a] + A1 + A2)
            Kd = -(ki[a] + B1 + B2)
            cd = look(Jd, Kd)
            hit = cd != 0
            if d < i:
                hit &= np.hypot(Jd * sup.dmu, Kd / sup.lam) <= im.N
            if not hit.any():
                continue
            legs = {i: np.broadcast_to(_tuple_xi(ji[a], ki[a], sup), A1.shape + (2,))[hit],
                    f1: _tuple_xi(A1, B1, sup)[hit], f2: _tuple_xi(A2, B2, sup)[hit],
                    d: _tuple_xi(Jd, Kd, sup)[hit]}
            xs = np.stack([legs[p] for p in range(4)], axis=-2)
            K = np.prod(im(_norms(xs)), axis=-1) - lambda4(xs, im, check=False)
            kmax = max(kmax, float(np.abs(K).max()))
            total += ci[a] * np.sum(K * C12[hit] * cd[hit])
            info["tuples"] += int(hit.sum())
    gap = QUARTIC_NORM * float(total.real) * cell**3
    A = float(np.abs(sup.c).sum()) * cell
    D = sup.dropped_l1
    info["truncation_bound"] = QUARTIC_NORM * kmax * ((A + D) ** 4 - A**4)
    return gap, info


def modified_energy_E0(F: SpectralField, im: IMultiplier, floor: float = 1e-7, budget: float = 2e8,
                       quartic_norm: float = QUARTIC_NORM):
    """``E_0(u)`` and diagnostics.

    Quadratic part by frequency quadrature; quartic part as
    ``quartic_norm * ||Iu||_4^4 - gap`` with the high-leg correction from
    ``energy_gap`` (exact decomposition of the Sigma_4 sum of
    ``Lambda_4``).
    """
    quad = kinetic(F, im)
    G = apply_I(F, im)
    g = F.geometry
    l4 = float(np.sum(np.abs(inverse_transform(G).values) ** 4)) * g.dx * g.dy
    gap, info = energy_gap(F, im, floor, budget)
    gap *= quartic_norm / QUARTIC_NORM
    info.update(quadratic=quad, quartic=quartic_norm * l4 - gap, gap=gap, E_Iu=quad + quartic_norm * l4)
    return quad + quartic_norm * l4 - gap, info
