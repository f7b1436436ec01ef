"""
A Banach frame for l^3 with coefficients in l^1.5
=================================================

Away from p = 2 there are no singular values to lean on.  Norms are sups
over non-Euclidean spheres, found by a multistart ascent and bracketed by
certified bounds.
"""

import numpy as np

from framelab import FrameSystem, PerturbationConstants, minimal_mu, op_norm, verify_banach_frame_perturbation

rng = np.random.default_rng(3)
G = FrameSystem.from_matrix(rng.standard_normal((4, 3)), p=3, q=1.5)

###############################################################################
# The pseudo-inverse reconstructs f from its coefficients, but its norm as
# a map from l^1.5 to l^3 is not a singular value.

S = np.linalg.pinv(G.matrix)
est = op_norm(S, G.space_Xd, G.space_X)
print(f"||S|| = {est.value:.6f}, certified within [{est.certified_low:.6f}, {est.certified_high:.6f}] ({est.method})")

###############################################################################
# Perturb and certify.  The report checks that a reconstruction operator
# for the new family exists and that its lower bound beats the prediction.

Phi = G.like(G.matrix + 0.03 * rng.standard_normal(G.matrix.shape))
k = PerturbationConstants(minimal_mu(G, Phi, 0.05, 0.05, certified=True), 0.05, 0.05)
rep = verify_banach_frame_perturbation(G, Phi, k, S=S)
print(f"verdict: {rep.verdict}")
print(f"predicted lower {rep.predicted_lower:.4f} <= actual {rep.actual_lower.value:.4f}")
print(f"actual upper {rep.actual_upper.value:.4f} <= predicted {rep.predicted_upper:.4f}")
print(f"reconstruction error of the new operator: {rep.details['reconstruction_error']:.1e}")

###############################################################################
# Too large a mu breaks the hypothesis and the report says so instead of
# producing bounds.

rep = verify_banach_frame_perturbation(G, Phi, k.replace(mu=10.0), S=S)
print(f"with mu = 10: {rep.verdict} ({rep.hypothesis_status})")
