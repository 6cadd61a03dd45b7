"""Spot checks of the deterministic averaging inequalities.

Three of the quantitative tools behind disorder averaging, checked on
concrete instances with both sides printed:

  1. sublevel bound:  |{x in [0,1] : |P(x)| <= alpha}| <= 4 alpha^(1/k)
     for monic degree-k polynomials (sharp up to the constant);
  2. Cartan-type bound on how long an analytic function can stay
     exponentially small on a disc;
  3. fractional average of |det(A + t V)|^(-s) over the coupling t,
     bounded uniformly in the matrices.

Each check returns an InequalityReport with the measured left side, the
guaranteed right side, and a numerical error estimate.
"""

import numpy as np

from alloylab import DisorderSpec, MonicPolynomial
from alloylab.polyavg import (cartan_disc, determinant_average,
                              polya_sublevel_measure)

rng = np.random.default_rng(123)

# --- 1. polynomial sublevel sets -----------------------------------------
print("sublevel measure  |{ |P| <= alpha }|  vs  4 alpha^(1/k):")
for deg in (2, 3, 5):
    roots = rng.uniform(0.0, 1.0, size=deg)
    coeffs = tuple(np.poly(roots)[1:])          # monic, roots inside [0,1]
    for alpha in (1e-3, 1e-2, 1e-1):
        rep = polya_sublevel_measure(MonicPolynomial(coeffs), alpha)
        slack = rep.rhs / rep.lhs if rep.lhs > 0 else float("inf")
        print(f"  deg {deg}, alpha={alpha:7.0e}: "
              f"lhs {rep.lhs:.5f} <= rhs {rep.rhs:.5f}  (slack x{slack:.1f})")

# --- 2. Cartan small-value bound -----------------------------------------
print("\nCartan bound: measure of {x in [-1,1] : |f(x)| <= e^{-s}} for "
      "f bounded by 1\non the disc |z| < 2e with |f(0)| >= eps:")
R = 2.0 * np.e
for trial in range(4):
    raw = rng.normal(size=4)
    raw[0] = np.sign(raw[0]) * max(abs(raw[0]), 0.5)   # keep f(0) away from 0
    scaled = raw * R ** -np.arange(4)                  # tame growth on the disc
    coeffs = scaled / np.abs(raw).sum()                # sup on the disc <= 1
    eps = 0.5 * abs(coeffs[0])
    rep = cartan_disc(tuple(coeffs), eps=eps, s=6.0)
    print(f"  instance {trial}: eps={eps:.4f}  lhs {rep.lhs:.5f} "
          f"<= rhs {rep.rhs:.5f}  hypotheses_met={rep.hypotheses_met}")

# a polynomial with a root inside [-1,1] has a genuinely nonzero
# sublevel set; the bound still holds with margin
c = 1.0 / (R + 0.3)              # sup of |c (z - 0.3)| on the disc is 1
for s_level in (2.0, 4.0, 6.0):
    rep = cartan_disc((-0.3 * c, c), eps=0.25 * c, s=s_level)
    print(f"  root at 0.3, s={s_level:g}: lhs {rep.lhs:.5f} "
          f"<= rhs {rep.rhs:.5f}")

# --- 3. averaged inverse determinant -------------------------------------
print("\nE_t |det(A + t V)|^(-s) over t ~ uniform[0,1], s = 1/2:")
mu = DisorderSpec.uniform(0.0, 1.0)
for n in (2, 4):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    A = Q @ np.diag(rng.uniform(-1, 1, n)) @ Q.T
    rep = determinant_average(A, np.eye(n), mu, s=0.5)
    print(f"  n={n}: average {rep.lhs:.5f} <= uniform bound {rep.rhs:.5f}")

print("\nall right-hand sides hold with room to spare; the bounds are "
      "uniform in the\nspecific polynomial / matrix, which is exactly what "
      "the spectral averaging\narguments need.")
