"""Measures of resonant frequency sets, computed line by line.

For a fixed output frequency ``xi = (mu, eta)`` and time frequency ``tau``
the sets live in ``R x (1/lambda)Z``. On each lattice line ``eta_2 = k/lambda``
every constraint is a union of at most two intervals in ``mu_2``:

* resonance ``|tau - |xi_2|^2 - |xi - xi_2|^2| <= 1`` is
  ``| (mu_2 - mu/2)^2 - tau_k | <= 1/2`` with
  ``tau_k = tau/2 - (k/lambda - eta/2)^2 - |xi|^2/4``;
* annuli ``|xi_2| in [N2, 2 N2]`` and ``|xi - xi_2| in [N1, 2 N1]`` are
  windows on a squared distance;
* the gap ``|mu/2 - mu_2| >= M`` is the complement of an open interval;
* sector membership is solved through the monotonicity of ``arg`` along
  a horizontal line;
* the conjugate set uses the linear condition
  ``|tau + |xi|^2 - 2 mu mu_2 - 2 eta eta_2| <= 1`` and ``|mu| >= M``.

The measure is ``(1/lambda) * sum_k length(slice_k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .intervals import IntervalRows, IntervalSet
from .projectors import angle_distance

VARIANTS = ("M_FULL", "M1_NO_ANGLE", "M_TILDE")
WIDEN = 1e-12


@dataclass(frozen=True)
class MeasureQuery:
    tau: float
    mu: float
    k: int
    lam: float
    M: float
    theta: float
    N1: float
    N2: float
    sectors: Optional[tuple] = None
    variant: str = "M_FULL"
    c_sector: float = 2.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not (self.lam >= 1 and self.M >= 1 and 0 < self.theta < 1 and self.N1 >= self.N2 > 1):
            raise ValueError("query violates lambda>=1, M>=1, 0<theta<1, N1>=N2>1")
        if self.variant == "M_FULL" and (self.sectors is None or len(self.sectors) != 2):
            raise ValueError("M_FULL needs a pair of sector indices")
        if self.variant == "M_TILDE" and (self.sectors is None or self.sectors[1] is None):
            raise ValueError("M_TILDE needs the sector index of xi - xi_2 (second entry)")

    @property
    def eta(self) -> float:
        return self.k / self.lam

    @property
    def xi_sq(self) -> float:
        return self.mu**2 + self.eta**2


def bound_formula(q: MeasureQuery) -> float:
    if q.variant == "M_FULL":
        return 1.0 / (q.lam * q.M) + q.theta
    if q.variant == "M1_NO_ANGLE":
        return 1.0 / (q.lam * q.M) + q.N2 / q.M
    return 1.0 / (q.lam * q.M) + q.N1 * q.theta / q.M


# -- one-constraint interval families (vectorized over lines) ----------------------

def _square_window(center, a, b):
    """``{x : a <= (x - center)^2 <= b}`` per row; ``a, b`` arrays."""
    center = np.broadcast_to(np.asarray(center, float), np.shape(b))
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    r_hi = np.sqrt(np.where(b >= 0, b, np.nan))
    r_lo = np.sqrt(np.where(a > 0, a, 0.0))
    nan = ~(b >= 0)
    single = (a <= 0) & ~nan
    lo1 = np.where(single, center - r_hi, center - r_hi)
    hi1 = np.where(single, center + r_hi, center - r_lo)
    lo2 = np.where(single, np.inf, center + r_lo)
    hi2 = np.where(single, -np.inf, center + r_hi)
    lo1 = np.where(nan, np.inf, lo1)
    hi1 = np.where(nan, -np.inf, hi1)
    lo2 = np.where(nan, np.inf, lo2)
    hi2 = np.where(nan, -np.inf, hi2)
    return IntervalRows.from_columns((lo1, hi1), (lo2, hi2))


def _arc_pieces(center, half):
    """The arc ``[center-half, center+half]`` as pieces of ``[0, 2 pi]``."""
    if half >= math.pi:
        return [(0.0, 2 * math.pi)]
    s = (center - half) % (2 * math.pi)
    e = s + 2 * half
    if e <= 2 * math.pi:
        return [(s, e)]
    return [(s, 2 * math.pi), (0.0, e - 2 * math.pi)]


def _cot(phi):
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.cos(phi) / np.sin(phi)
    return c


def _sector_rows(y, center, half):
    """``{x : arg(x, y) within half of center}`` for each line height ``y``."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return _sector_rows_impl(y, center, half)


def _sector_rows_impl(y, center, half):
    y = np.asarray(y, float)
    n = y.size
    pieces = _arc_pieces(center, half)
    cols = []
    for a, b in pieces:
        # upper half plane: angles in [0, pi], x = y cot(phi) decreasing in phi
        ua, ub = max(a, 0.0), min(b, math.pi)
        if ub >= ua:
            lo_u = y * (_cot(ub) if ub < math.pi else -np.inf)
            hi_u = y * (_cot(ua) if ua > 0 else np.inf)
        else:
            lo_u = hi_u = None
        # lower half plane: angles in [pi, 2 pi], x = y cot(phi) increasing in phi
        la, lb = max(a, math.pi), min(b, 2 * math.pi)
        if lb >= la:
            lo_l = y * (_cot(la) if la > math.pi else np.inf)
            hi_l = y * (_cot(lb) if lb < 2 * math.pi else -np.inf)
        else:
            lo_l = hi_l = None
        lo = np.full(n, np.inf)
        hi = np.full(n, -np.inf)
        up = y > 0
        dn = y < 0
        if lo_u is not None:
            lo = np.where(up, lo_u, lo)
            hi = np.where(up, hi_u, hi)
        if lo_l is not None:
            lo = np.where(dn, lo_l, lo)
            hi = np.where(dn, hi_l, hi)
        cols.append((lo, hi))
    # the line y = 0: arg is 0 on x > 0 and pi on x < 0
    zero = y == 0
    if np.any(zero):
        has0 = angle_distance(0.0, center) <= half
        hasp = angle_distance(math.pi, center) <= half
        lo0 = np.where(zero, 0.0 if has0 else np.inf, np.inf)
        hi0 = np.where(zero, np.inf if has0 else -np.inf, -np.inf)
        lop = np.where(zero, -np.inf if hasp else np.inf, np.inf)
        hip = np.where(zero, 0.0 if hasp else -np.inf, -np.inf)
        cols.append((lo0, hi0))
        cols.append((lop, hip))
    # for y = 0 rows the half-plane columns are already empty
    rows = IntervalRows.from_columns(*cols)
    return rows.compact()


def _gap_rows(n, center, M):
    lo1 = np.full(n, -np.inf)
    hi1 = np.full(n, center - M)
    lo2 = np.full(n, center + M)
    hi2 = np.full(n, np.inf)
    return IntervalRows.from_columns((lo1, hi1), (lo2, hi2))


def tau_k(q: MeasureQuery, k) -> np.ndarray:
    k = np.asarray(k, float)
    return q.tau / 2.0 - (k / q.lam - q.eta / 2.0) ** 2 - q.xi_sq / 4.0


def tau_k_sequence(q: MeasureQuery, k_range):
    """``tau_k`` on the given integer range and consecutive differences."""
    ks = np.asarray(list(k_range), np.int64)
    vals = tau_k(q, ks)
    return vals, np.diff(vals)


def _sector_y_range(center, half, rmin, rmax):
    """Range of ``y = r sin(phi)`` over the wedge-annulus piece."""
    if half >= math.pi:
        return -rmax, rmax
    cands = []
    for r in (rmin, rmax):
        for phi in (center - half, center + half):
            cands.append(r * math.sin(phi))
    for phi in (math.pi / 2, -math.pi / 2):
        if angle_distance(phi, center) <= half:
            cands.append(rmax * math.sin(phi))
    return min(cands), max(cands)


def line_range(q: MeasureQuery) -> np.ndarray:
    """Integer ``k`` values whose line can meet the set (a superset)."""
    lam = q.lam
    ylo, yhi = -2.0 * q.N2, 2.0 * q.N2
    # |xi - xi_2| <= 2 N1
    ylo = max(ylo, q.eta - 2.0 * q.N1)
    yhi = min(yhi, q.eta + 2.0 * q.N1)
    if q.variant in ("M_FULL", "M1_NO_ANGLE"):
        R2 = q.tau / 2.0 - q.xi_sq / 4.0 + 0.5
        if R2 < 0:
            return np.zeros(0, np.int64)
        R = math.sqrt(R2)
        ylo = max(ylo, q.eta / 2.0 - R)
        yhi = min(yhi, q.eta / 2.0 + R)
    if q.variant == "M_FULL":
        a, b = _sector_y_range(q.sectors[0] * q.theta, q.c_sector * q.theta, q.N2, 2 * q.N2)
        ylo, yhi = max(ylo, a), min(yhi, b)
    if q.variant in ("M_FULL", "M_TILDE"):
        a, b = _sector_y_range(q.sectors[1] * q.theta, q.c_sector * q.theta, q.N1, 2 * q.N1)
        # y_2 = eta - y_1
        ylo, yhi = max(ylo, q.eta - b), min(yhi, q.eta - a)
    pad = 1e-9
    k0 = math.ceil((ylo - pad) * lam)
    k1 = math.floor((yhi + pad) * lam)
    if k1 < k0:
        return np.zeros(0, np.int64)
    return np.arange(k0, k1 + 1, dtype=np.int64)


def slice_rows(q: MeasureQuery, ks: np.ndarray) -> IntervalRows:
    """Per-line slices of the query's set for every ``k`` in ``ks``."""
    ks = np.asarray(ks, np.int64)
    n = ks.size
    if n == 0:
        return IntervalRows(np.full((0, 1), np.inf), np.full((0, 1), -np.inf))
    y = ks / q.lam
    yo = q.eta - y  # eta component of xi - xi_2
    rows = []
    rows.append(_square_window(0.0, q.N2**2 - y**2, 4 * q.N2**2 - y**2))
    rows.append(_square_window(q.mu, q.N1**2 - yo**2, 4 * q.N1**2 - yo**2))
    if q.variant in ("M_FULL", "M1_NO_ANGLE"):
        tk = tau_k(q, ks)
        rows.append(_square_window(q.mu / 2.0, tk - 0.5, tk + 0.5))
        rows.append(_gap_rows(n, q.mu / 2.0, q.M))
    else:
        C = q.tau + q.xi_sq - 2.0 * q.eta * y
        if abs(q.mu) < q.M:
            return IntervalRows(np.full((n, 1), np.inf), np.full((n, 1), -np.inf))
        a = (C - 1.0) / (2.0 * q.mu)
        b = (C + 1.0) / (2.0 * q.mu)
        rows.append(IntervalRows.from_columns((np.minimum(a, b), np.maximum(a, b))))
    if q.variant == "M_FULL":
        rows.append(_sector_rows(y, q.sectors[0] * q.theta, q.c_sector * q.theta))
    if q.variant in ("M_FULL", "M_TILDE"):
        s = _sector_rows(yo, q.sectors[1] * q.theta, q.c_sector * q.theta)
        # x_1 = mu - x_2 reverses orientation
        s = IntervalRows(np.where(s.hi >= s.lo, q.mu - s.hi, np.inf), np.where(s.hi >= s.lo, q.mu - s.lo, -np.inf))
        rows.append(s.compact())
    out = rows[0].widened(WIDEN)
    for r in rows[1:]:
        out = out.intersect(r.widened(WIDEN))
    return out


def per_line_slice(q: MeasureQuery, k: int) -> IntervalSet:
    """The set of ``mu_2`` on the line ``eta_2 = k/lambda`` meeting every active constraint."""
    return slice_rows(q, np.array([k])).row(0)


def measure(q: MeasureQuery) -> float:
    ks = line_range(q)
    if ks.size == 0:
        return 0.0
    return float(slice_rows(q, ks).lengths().sum() / q.lam)


def measure_details(q: MeasureQuery):
    """``(measure, ks, per-line lengths)``."""
    ks = line_range(q)
    if ks.size == 0:
        return 0.0, ks, np.zeros(0)
    L = slice_rows(q, ks).lengths()
    return float(L.sum() / q.lam), ks, L


def nonempty_line_count(q: MeasureQuery) -> int:
    ks = line_range(q)
    if ks.size == 0:
        return 0
    return int(slice_rows(q, ks).nonempty().sum())


# -- annulus ------------------------------------------------------------------

class EmptyAnnulus(ValueError):
    pass


def annulus_params(q: MeasureQuery):
    """Center radius and width of the annulus around ``xi/2`` holding the resonant set.

    Exactly: ``(D - 2)/4 <= |xi_2 - xi/2|^2 <= (D + 2)/4`` with ``D = 2 tau - |xi|^2``;
    returns ``(r, width, inner, outer)`` with ``r = sqrt(D)/2``.
    """
    D = 2.0 * q.tau - q.xi_sq
    if D <= 0:
        raise EmptyAnnulus("2 tau - |xi|^2 must be positive")
    outer = math.sqrt(D + 2.0) / 2.0
    inner = math.sqrt(max(D - 2.0, 0.0)) / 2.0
    return math.sqrt(D) / 2.0, outer - inner, inner, outer


# -- pointwise membership (independent of the interval engine) ------------------

def membership(q: MeasureQuery, mu2, k2) -> np.ndarray:
    """Direct test of every constraint at points ``(mu2, k2/lambda)``."""
    mu2 = np.asarray(mu2, float)
    e2 = np.asarray(k2, float) / q.lam
    m1 = q.mu - mu2
    e1 = q.eta - e2
    n2 = np.hypot(mu2, e2)
    n1 = np.hypot(m1, e1)
    ok = (n2 >= q.N2) & (n2 <= 2 * q.N2) & (n1 >= q.N1) & (n1 <= 2 * q.N1)
    if q.variant in ("M_FULL", "M1_NO_ANGLE"):
        ok &= np.abs(q.tau - n2**2 - n1**2) <= 1.0
        ok &= np.abs(q.mu / 2.0 - mu2) >= q.M
    else:
        ok &= abs(q.mu) >= q.M
        ok &= np.abs(q.tau - n2**2 + n1**2) <= 1.0
    hw = q.c_sector * q.theta
    if q.variant == "M_FULL":
        ok &= angle_distance(np.arctan2(e2, mu2), q.sectors[0] * q.theta) <= hw
    if q.variant in ("M_FULL", "M_TILDE"):
        ok &= angle_distance(np.arctan2(e1, m1), q.sectors[1] * q.theta) <= hw
    return ok


def mc_measure(q: MeasureQuery, n_samples: int, rng: np.random.Generator, chunk: int = 1_000_000):
    """Monte-Carlo estimate of the measure.

    Samples uniformly from a sampling region built only from crude
    necessary conditions (a disc of radius ``2 N2`` and, for the resonant
    variants, the disc ``|xi_2 - xi/2|^2 <= (tau + 1 - |xi|^2/2)/2``).
    Returns ``(estimate, region_area, hits)``.
    """
    lam = q.lam
    kmax = int(math.floor(2 * q.N2 * lam))
    ks = np.arange(-kmax, kmax + 1)
    y = ks / lam
    half = np.sqrt(np.maximum(4 * q.N2**2 - y**2, 0.0))
    lo, hi = -half, half
    if q.variant != "M_TILDE":
        R2 = (q.tau + 1.0 - q.xi_sq / 2.0) / 2.0
        if R2 <= 0:
            return 0.0, 0.0, 0
        h2 = np.sqrt(np.maximum(R2 - (y - q.eta / 2.0) ** 2, 0.0))
        lo = np.maximum(lo, q.mu / 2.0 - h2)
        hi = np.minimum(hi, q.mu / 2.0 + h2)
    seg = np.maximum(hi - lo, 0.0)
    keep = seg > 0
    ks, lo, seg = ks[keep], lo[keep], seg[keep]
    total = float(seg.sum())
    if total == 0.0:
        return 0.0, 0.0, 0
    cum = np.cumsum(seg)
    hits = 0
    left = n_samples
    while left > 0:
        m = min(chunk, left)
        u = rng.uniform(0.0, total, m)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), seg.size - 1)
        x = lo[idx] + (u - (cum[idx] - seg[idx]))
        hits += int(np.count_nonzero(membership(q, x, ks[idx])))
        left -= m
    area = total / lam
    return area * hits / n_samples, area, hits


def mc_zscore(q: MeasureQuery, n_samples: int, rng: np.random.Generator):
    """z-score of the exact measure against the Monte-Carlo estimate.

    The standard error is taken under the null hypothesis (success
    probability ``exact/area``), floored at one sample's resolution.
    """
    exact = measure(q)
    est, area, hits = mc_measure(q, n_samples, rng)
    if area == 0.0:
        return exact, est, 0.0, (0.0 if exact == 0.0 else math.inf)
    p0 = min(max(exact / area, 0.0), 1.0)
    se = area * math.sqrt(max(p0 * (1 - p0), 1.0 / n_samples) / n_samples)
    return exact, est, se, (est - exact) / se


# -- query generation and sweeps -------------------------------------------------

def _lattice_point_in_band(N, lam, rng, angle=None):
    r = N * rng.uniform(1.0, 2.0)
    a = rng.uniform(0, 2 * math.pi) if angle is None else angle
    mu = r * math.cos(a)
    k = int(round(r * math.sin(a) * lam))
    return mu, k


def random_query(variant: str, rng: np.random.Generator, lam=None, N1=None, N2=None, M=None, theta=None):
    """A query built around a resonant configuration so the set is typically nonempty."""
    lam = float(lam if lam is not None else rng.choice([1, 2, 4, 8]))
    N1 = float(N1 if N1 is not None else rng.choice([4, 8, 16]))
    N2 = float(N2 if N2 is not None else rng.choice([n for n in (2, 4, 8, 16) if n <= N1]))
    theta = float(theta if theta is not None else 2.0 ** -rng.integers(2, 6))
    mu2, k2 = _lattice_point_in_band(N2, lam, rng)
    a2 = math.atan2(k2 / lam, mu2)
    if variant == "M_FULL":
        a1 = a2 + rng.choice([-1, 1]) * math.pi / 2 + rng.uniform(-2, 2) * theta
    else:
        a1 = None
    mu1, k1 = _lattice_point_in_band(N1, lam, rng, angle=a1)
    mu, k = mu1 + mu2, k1 + k2
    n1sq = mu1**2 + (k1 / lam) ** 2
    n2sq = mu2**2 + (k2 / lam) ** 2
    if variant == "M_TILDE":
        tau = n2sq - n1sq + rng.uniform(-1, 1)
        # keep |mu| >= M possible
        Mv = float(M if M is not None else max(1.0, abs(mu) * rng.uniform(0.2, 1.0)))
    else:
        tau = n1sq + n2sq + rng.uniform(-1, 1)
        gapmax = abs(mu / 2 - mu2)
        Mv = float(M if M is not None else max(1.0, gapmax * rng.uniform(0.1, 1.2)))
    l1 = int(round(math.atan2(k2 / lam, mu2) / theta)) + int(rng.integers(-1, 2))
    l2 = int(round(math.atan2(k1 / lam, mu1) / theta)) + int(rng.integers(-1, 2))
    sectors = (l1, l2) if variant == "M_FULL" else (None, l2) if variant == "M_TILDE" else None
    return MeasureQuery(tau, mu, k, lam, Mv, theta, N1, N2, sectors, variant)


@dataclass
class SweepResult:
    variant: str
    rows: list = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max((r["ratio"] for r in self.rows), default=0.0)

    @property
    def argmax(self):
        if not self.rows:
            return None
        return max(self.rows, key=lambda r: r["ratio"])


def query_row(q: MeasureQuery) -> dict:
    m = measure(q)
    b = bound_formula(q)
    return dict(
        variant=q.variant, lam=q.lam, M=q.M, theta=q.theta, N1=q.N1, N2=q.N2,
        tau=q.tau, mu=q.mu, eta=q.eta, measure=m, bound=b, ratio=m / b,
    )


def sup_sweep(variant: str, queries) -> SweepResult:
    """Evaluate every query, return rows with ``measure / bound`` ratios."""
    res = SweepResult(variant)
    for q in queries:
        if q.variant != variant:
            q = replace(q, variant=variant)
        res.rows.append(query_row(q))
    return res


def adversarial_queries(variant, lam, N1, N2, M, theta, rng, n_random=4):
    """Designed worst-case candidates for one parameter point.

    Radii of the resonance annulus are placed at ``M``, ``N2`` and ``N1``;
    ``xi`` is aligned with the axes and with sector bisectors; a few
    random resonant configurations are added.
    """
    out = []
    lam = float(lam)
    for base_angle in (0.0, math.pi / 2, math.pi / 4, rng.uniform(0, 2 * math.pi)):
        for r in (M, N2, N1, 1.5 * N1):
            for xi_scale in (N1, 1.5 * N1, 2 * N1 + N2):
                mu = xi_scale * math.cos(base_angle)
                k = int(round(xi_scale * math.sin(base_angle) * lam))
                xi_sq = mu**2 + (k / lam) ** 2
                if variant == "M_TILDE":
                    tau = 2 * r * r - xi_sq
                else:
                    tau = xi_sq / 2 + 2 * r * r
                # sector indices aimed at the two factors of a transversal pair
                a2 = base_angle + math.pi / 2
                l1 = int(round(a2 / theta))
                l2 = int(round(base_angle / theta))
                sec = (l1, l2) if variant == "M_FULL" else (None, l2) if variant == "M_TILDE" else None
                Mq = M
                if variant == "M_TILDE" and abs(mu) < M:
                    continue
                out.append(MeasureQuery(tau, mu, k, lam, Mq, theta, N1, N2, sec, variant))
    for _ in range(n_random):
        try:
            out.append(random_query(variant, rng, lam=lam, N1=N1, N2=N2, M=M, theta=theta))
        except ValueError:
            pass
    return out


def sector_pair_transversal(l1, l2, theta, c_sector=2.0) -> bool:
    """Whether sectors ``l1, l2`` can hold a pair with ``|cos angle| <= theta``.

    The sector centers must differ by ``pi/2`` (mod ``pi``) up to the two
    half-widths plus ``asin(theta)``; only such pairs enter the angular
    estimate.
    """
    d = abs((l1 - l2) * theta) % (2 * math.pi)
    d = min(d, 2 * math.pi - d)
    return abs(d - math.pi / 2) <= math.asin(min(theta, 1.0)) + 2 * c_sector * theta + 1e-12


def in_regime(q: MeasureQuery) -> bool:
    """``M_FULL`` queries need a transversal sector pair; the other variants always qualify."""
    if q.variant != "M_FULL" or q.sectors is None:
        return True
    return sector_pair_transversal(q.sectors[0], q.sectors[1], q.theta, q.c_sector)


def grazing_family(variant, lam, N1, N2, M, theta, offsets=(0.0, 0.25, 0.5, 1.0, 2.0), angles=4):
    """Lattice lines grazing the resonance annulus with ``|eta| ~ N1``.

    For a target point ``xi_2*`` with ``|xi_2*| = 1.5 N2`` on a lattice line,
    ``xi`` is placed so that ``mu/2`` equals the x-coordinate of ``xi_2*``
    and ``eta - eta_2* ~ 1.5 N1``; the annulus then meets the line of
    ``xi_2*`` at ``mu_2 = mu/2 +- rho`` with ``rho`` ranging over ``0``
    (tangency, removed by the gap) and ``M + offsets`` (just outside the gap).

    ``M1_NO_ANGLE`` targets spread over the first quadrant. ``M_FULL``
    targets are orthogonal to ``xi - xi_2*`` and then rotated by at most
    ``theta``; targets whose sector pair is not transversal are dropped.
    """
    if variant == "M_TILDE":
        return []
    lam = float(lam)
    h1, h2 = 1.5 * N1, 1.5 * N2
    targets = []
    if variant == "M_FULL":
        # xi_2* . (xi - xi_2*) = 0 with xi - xi_2* = (m2, h1): m2^2 = -h1 e2
        e2 = 0.5 * (h1 - math.sqrt(h1 * h1 + 4 * h2 * h2))
        base = math.atan2(e2, math.sqrt(max(-h1 * e2, 0.0)))
        for sgn in (1.0, -1.0):
            for j in range(angles + 1):
                dlt = (2.0 * j / angles - 1.0) * theta
                a = base + dlt if sgn > 0 else math.pi - base - dlt
                targets.append(a)
    else:
        targets = [(i + 0.5) * math.pi / (2 * angles) for i in range(angles)]
    out = []
    for a in targets:
        k2 = int(round(h2 * math.sin(a) * lam))
        m2 = h2 * math.cos(a)
        k = k2 + int(round(h1 * lam))
        mu = 2.0 * m2
        eta, e2 = k / lam, k2 / lam
        d = e2 - eta / 2.0
        sec = None
        if variant == "M_FULL":
            sec = (int(round(math.atan2(e2, m2) / theta)), int(round(math.atan2(eta - e2, mu - m2) / theta)))
            if not sector_pair_transversal(sec[0], sec[1], theta):
                continue
        for rho in (0.0,) + tuple(M + o for o in offsets):
            tau = (mu**2 + eta**2) / 2.0 + 2.0 * (d * d + rho * rho)
            out.append(MeasureQuery(tau, mu, k, lam, M, theta, N1, N2, sec, variant))
    return out


def drift_ok(rows, key, value="ratio", factor=1.5) -> tuple[bool, float, float]:
    """Upper-half (in ``key``) maximum vs lower-half maximum of ``value``.

    Passes when ``max_upper <= factor * max_lower``, i.e. no upward trend.
    """
    vals = sorted({r[key] for r in rows})
    if len(vals) < 2:
        return True, 0.0, 0.0
    cut = vals[len(vals) // 2]
    lower = max((r[value] for r in rows if r[key] < cut), default=0.0)
    upper = max((r[value] for r in rows if r[key] >= cut), default=0.0)
    return upper <= factor * lower or upper == 0.0, lower, upper


def trend_ok(rows, key, value="ratio", factor=1.5) -> tuple[bool, float, float]:
    """Two-sided version of ``drift_ok``: neither half-grid maximum exceeds ``factor`` times the other."""
    ok_up, lower, upper = drift_ok(rows, key, value, factor)
    if lower == 0.0 and upper == 0.0:
        return True, lower, upper
    return ok_up and lower <= factor * upper, lower, upper
