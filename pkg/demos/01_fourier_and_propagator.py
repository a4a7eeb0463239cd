"""Transform a random field on R x T_lam, evolve it freely, split it into dyadic pieces."""

import numpy as np

from waveguide_lab.fourier import WaveguideGeometry, forward_transform, inverse_transform, random_field
from waveguide_lab.projectors import PHASE, littlewood_paley, propagate
from waveguide_lab.selftest import top_dyadic

rng = np.random.default_rng(0)
g = WaveguideGeometry(2.0, 16.0, 256, 64)
f = random_field(g, rng)
F = forward_transform(f)
print(f"grid {g.shape}, torus {g.lam}, half-length {g.L}, phase constant {PHASE:.4f}")
print(f"Plancherel: |f| = {f.norm():.12f}, |F| = {F.norm():.12f}")
print(f"round trip error {np.abs(inverse_transform(F).values - f.values).max():.2e}")

# the free flow only rotates phases, so every norm is kept
for t in (0.1, 1.0, 10.0):
    print(f"t = {t:5.1f}: |U(t)F| / |F| - 1 = {propagate(F, t).norm() / F.norm() - 1:.1e}")

# sharp dyadic pieces are orthogonal, so their squared norms add up
Nmax = top_dyadic(g)
parts = littlewood_paley(F, Nmax, sharp=True)
for N, P in sorted(parts.items()):
    print(f"  P_{N:<4} carries {P.norm() ** 2 / F.norm() ** 2:6.1%} of the mass")
