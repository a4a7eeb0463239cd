"""Rescale seeded data, evolve the cubic equation and watch E(Iu) and the corrected energy."""

import numpy as np

from waveguide_lab import nls
from waveguide_lab.fourier import WaveguideGeometry
from waveguide_lab.imethod import IMultiplier, modified_energy_E0

g = WaveguideGeometry(1.0, 8.0, 128, 16)
u0 = nls.seeded_data(g, np.random.default_rng(2), amplitude=2.0)
s, N = 0.6, 8.0
ch = nls.choose_lambda(s, N, u0)
print(f"lambda = {ch.lam:.3f} (c = {ch.c}), E(I u^lambda) = {ch.energy:.4f}")

u = nls.rescale(u0, ch.lam)
im = IMultiplier(N, s)
st = nls.NlsState(0.0, u, 0.5 * nls.max_dt(u.geometry))
end, snaps = nls.evolve_to(st, 0.5, 5)
for i, S in enumerate(snaps):
    E0, info = modified_energy_E0(S, im)
    print(f"  t = {0.125 * i:.3f}: mass {S.norm() ** 2:.10f}  E(Iu) {info['E_Iu']:.8f}  E_0 {E0:.8f}")
