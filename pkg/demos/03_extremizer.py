"""Indicator-spectrum data that saturate the angular bilinear bound up to a constant (the LARGE case takes about two minutes)."""

from waveguide_lab import extremizers as ex

for lam, N1, N2, theta in [(1, 64, 8, 2.0**-6), (2, 64, 8, 2.0**-7), (32, 64, 8, 2.0**-4)]:
    s = ex.ExtremizerSpec(N1, N2, theta, lam)
    r = ex.verify_sharpness(s)
    print(f"lam {lam:3d} N1 {N1} N2 {N2} theta {theta:.4f} ({s.regime:5s}): "
          f"|U f1 U f2| = {r.lhs:.4e}, lower formula {r.rhs:.4e}, ratio {r.ratio:.3f}")
