"""Probing invertibility of the structured matrix C.

A small Monte-Carlo sweep per sampler, followed by an adversarial search
for nodes that make C as close to singular as possible.
"""
import numpy as np

from pointsource import conjecture_probe as cp
from pointsource import structured_matrices as sm

z = np.array([0.5, -0.3 + 0.4j, 0.2 - 0.7j])
bundle = sm.c_matrix(z)
print("C for three nodes:\n", np.round(bundle.C, 4))
print(f"sigma_min {bundle.sigma_min:.3e}, spectrum of U^-1 N U {np.round(sm.b_spectrum(z).real, 6)}")

for sampler in cp.SAMPLERS:
    rep = cp.probe_c(4, 2000, sampler=sampler, seed=0)
    print(f"\n{sampler}: min relative sigma_min {rep.min_relative_sigma_min:.3e}, "
          f"flagged {rep.flagged_count}, certified {rep.certified_count}")
    print(cp.render_histogram(rep), end="")

best = cp.minimize_sigma_min(4, restarts=6, seed=0, budget=600)
print(f"\nadversarial search: relative sigma_min {best.relative_sigma_min:.3e} at nodes")
print(np.round(np.asarray(best.nodes), 4))
