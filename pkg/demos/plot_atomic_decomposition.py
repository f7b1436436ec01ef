"""
Repairing an atomic decomposition after the atoms move
======================================================

Coefficient functionals g_i and atoms f_i reconstruct every vector.  When
the atoms move to psi_i the old functionals no longer do the job, and a new
family theta_i restores exact reconstruction.
"""

import numpy as np

from framelab import FrameSystem, PerturbationConstants, verify_atomic_decomposition_perturbation
from framelab.perturbation import atomic_residual_estimate

rng = np.random.default_rng(5)
G = FrameSystem.from_matrix(rng.standard_normal((4, 2)), p=1.5, q=2)
F = G.like(np.linalg.pinv(G.matrix).T)
Psi = F.like(F.matrix + 0.04 * rng.standard_normal(F.matrix.shape))

f = np.array([1.0, -2.0])
print("old functionals with new atoms:", Psi.matrix.T @ (G.matrix @ f))

###############################################################################
# Pick mu and lambda2, then take lambda1 from the certified residual so the
# closeness condition holds on the coefficients that actually occur.

k = PerturbationConstants(0.01, 0.0, 0.05)
k = k.replace(lambda1=max(atomic_residual_estimate(G, F, Psi, k).upper, 0.0))
print(f"constants: {k}")

rep = verify_atomic_decomposition_perturbation(G, F, Psi, k)
Theta = rep.details["Theta"]
print(f"verdict: {rep.verdict}")
print("new functionals with new atoms:", Psi.matrix.T @ (Theta @ f))
print(f"theta bounds [{rep.actual_lower.value:.4f}, {rep.actual_upper.value:.4f}]"
      f" inside [{rep.predicted_lower:.4f}, {rep.predicted_upper:.4f}]")

###############################################################################
# The truncated variant asks the condition for every partial sum.  Constants
# tuned to the full sum need not cover the partial sums, and here they do
# not: the first prefixes leave a positive residual.

rep = verify_atomic_decomposition_perturbation(G, F, Psi, k, mode="truncated_A10")
print("partial-sum residuals:", np.round(rep.details["prefix_residuals"], 4))
print(f"truncated verdict: {rep.verdict}")
