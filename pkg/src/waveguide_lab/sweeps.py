"""Parameter sweeps shared by the CLI and the acceptance suite.

Every sweep point gets its own generator from ``SeedSequence([seed, index])``
so results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import bilinear as bl
from . import measure as ms
from .extremizers import ExtremizerSpec, verify_sharpness


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def dyadic_range(lo, hi):
    out = []
    v = lo
    while v <= hi:
        out.append(v)
        v *= 2
    return out


# -- angular bilinear ---------------------------------------------------------------

def angular_points(lams, N1s, N2s, Ms, thetas):
    """Grid points with ``N2 <= N1`` and ``M <= N1``."""
    pts = []
    for lam, N1, N2, M, th in itertools.product(lams, N1s, N2s, Ms, thetas):
        if N2 <= N1 and M <= N1:
            pts.append(dict(lam=float(lam), N1=float(N1), N2=float(N2), M=float(M), theta=float(th)))
    return pts


def angular_task(args):
    """One grid point, ``draws`` random admissible boxes; returns report rows."""
    idx, p, seed, draws, half_j, half_k = args
    rng = point_rng(seed, idx)
    lam, dmu = bl.sweep_geometry(p["lam"], p["N1"], p["N2"])
    rows = []
    for d in range(draws):
        pair = bl.admissible_pair(lam, dmu, p["N1"], p["N2"], p["M"], p["theta"], rng, half_j, half_k)
        if pair is None:
            rows.append(dict(point=idx, draw=d, estimate_id="THM_ANGULAR_BILINEAR", **p,
                             lhs=0.0, rhs=0.0, ratio=0.0, degenerate=1))
            continue
        rep = bl.eval_angular_bilinear(lam, p["N1"], p["N2"], p["M"], p["theta"], *pair)
        row = dict(point=idx, draw=d)
        row.update(rep.as_row())
        rows.append(row)
    return rows


def quarter_check(rows, keys=("lam", "N1"), value="ratio", factor=1.5):
    """Overall max of ``value`` vs its max on the low quarter of the ``keys`` grid.

    The low quarter is the set of rows whose ``keys`` values all lie in the
    lower half of their grid values. Returns ``(ok, overall, reference)``.
    """
    if not rows:
        return True, 0.0, 0.0
    cuts = {}
    for k in keys:
        vals = sorted({r[k] for r in rows})
        cuts[k] = vals[max(1, len(vals) // 2) - 1] if len(vals) > 1 else vals[0]
    ref = max((r[value] for r in rows if all(r[k] <= cuts[k] for k in keys)), default=0.0)
    top = max(r[value] for r in rows)
    return top <= factor * ref, top, ref


# -- global bilinear (l^4 over slabs) -----------------------------------------------

def global_points(lams, Ns, eps=0.1, slabs=8):
    return [dict(lam=float(l), N1=float(N), N2=float(N), eps=eps, slabs=slabs) for l in lams for N in Ns]


def global_task(args):
    idx, p, seed, draws, half_j, half_k = args
    rng = point_rng(seed, idx)
    lam, dmu = bl.sweep_geometry(p["lam"], p["N1"], p["N2"])
    rows = []
    for d in range(draws):
        c1 = bl.random_point_in_band(p["N1"], rng)
        c2 = bl.random_point_in_band(p["N2"], rng)
        f1 = bl.random_box_in_band(lam, dmu, p["N1"], c1, half_j, half_k, rng)
        f2 = bl.random_box_in_band(lam, dmu, p["N2"], c2, half_j, half_k, rng)
        if not (f1.size and f2.size):
            continue
        rep = bl.eval_global_bilinear(lam, p["N1"], p["N2"], p["eps"], f1, f2, slabs=p["slabs"])
        row = dict(point=idx, draw=d)
        row.update(rep.as_row())
        rows.append(row)
    return rows


# -- measure ------------------------------------------------------------------------

def measure_points(variants, lams, N1s, N2s, Ms, thetas):
    pts = []
    for v, lam, N1, N2, M, th in itertools.product(variants, lams, N1s, N2s, Ms, thetas):
        if N2 <= N1 and M <= N1:
            pts.append(dict(variant=v, lam=float(lam), N1=float(N1), N2=float(N2), M=float(M), theta=float(th)))
    return pts


def measure_task(args):
    """Adversarial plus random queries at one point; returns the row with the largest ratio."""
    idx, p, seed, n_random, grazing = args
    rng = point_rng(seed, idx)
    qs = ms.adversarial_queries(p["variant"], p["lam"], p["N1"], p["N2"], p["M"], p["theta"], rng, n_random)
    if grazing:
        qs += ms.grazing_family(p["variant"], p["lam"], p["N1"], p["N2"], p["M"], p["theta"])
    # the angular bound only covers transversal sector pairs
    qs = [q for q in qs if ms.in_regime(q)]
    res = ms.sup_sweep(p["variant"], qs)
    best = res.argmax
    row = dict(point=idx, queries=len(res.rows))
    row.update(p)
    if best is None:
        row.update(tau=0.0, mu=0.0, eta=0.0, measure=0.0, bound=0.0, ratio=0.0)
    else:
        row.update({k: best[k] for k in ("tau", "mu", "eta", "measure", "bound", "ratio")})
    return [row]


# -- extremizers ------------------------------------------------------------------

def extremizer_task(args):
    idx, p = args[0], args[1]
    s = ExtremizerSpec(p["N1"], p["N2"], p["theta"], p["lam"])
    rep = verify_sharpness(s)
    row = dict(point=idx)
    row.update(rep.as_row())
    return [row]


def run_tasks(fn, tasks, workers: int = 1):
    """Ordered map over ``tasks``; a process pool when ``workers > 1``."""
    if workers <= 1 or len(tasks) <= 1:
        for t in tasks:
            yield fn(t)
        return
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield from ex.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers)))


def slope_ok(x, y, limit):
    """Least-squares log-log slope of positive data, and whether it is <= limit."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2 or np.any(~(y > 0)):
        return False, float("nan")
    s = float(np.polyfit(np.log(x), np.log(y), 1)[0])
    return s <= limit, s

