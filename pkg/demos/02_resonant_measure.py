"""Exact measure of resonant sets against Monte Carlo, then the worst grazing configurations."""

import numpy as np

from waveguide_lab import measure as ms

rng = np.random.default_rng(1)
for v in ms.VARIANTS:
    q = ms.random_query(v, rng)
    exact, est, se, z = ms.mc_zscore(q, 200_000, rng)
    print(f"{v:12s} exact {exact:.5f}  MC {est:.5f} +- {se:.5f}  (z = {z:+.2f})  bound {ms.bound_formula(q):.4f}")

# grazing lines are where the slab is nearly tangent to the horizontal lines of the lattice
lam, N1, N2, M, theta = 64.0, 64.0, 64.0, 4.0, 1 / 32
for v in ("M_FULL", "M1_NO_ANGLE"):
    qs = [q for q in ms.grazing_family(v, lam, N1, N2, M, theta) if ms.in_regime(q)]
    res = ms.sup_sweep(v, qs)
    print(f"{v:12s} grazing family: {len(qs)} queries, worst measure/bound {res.argmax['ratio']:.3f}")

# the slab-type set can follow a sector lying along the slab, which costs a factor 1/theta
for theta in (2.0**-3, 2.0**-5, 2.0**-7):
    qs = ms.adversarial_queries("M_TILDE", 4.0, 64.0, 64.0, 16.0, theta, rng, 8)
    res = ms.sup_sweep("M_TILDE", qs)
    print(f"M_TILDE theta = {theta:.5f}: worst measure/bound {res.argmax['ratio']:.2f}")
