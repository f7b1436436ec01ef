"""
Perturbing a frame in Euclidean space
=====================================

Three vectors in the plane form a frame.  We nudge them, measure how far the
nudge is in the three-constant sense, and compare the predicted frame bounds
with the ones computed for the nudged family.
"""

import numpy as np

from framelab import FrameSystem, PerturbationConstants, frame_bounds, minimal_mu, verify_frame_perturbation
from framelab.perturbation import hilbert_bounds_1_1

# rows are the frame vectors; p = q = 2 is the Hilbert case
G = FrameSystem.from_matrix([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]])
fb = frame_bounds(G)
print(f"frame bounds of G: A = {fb.lower.value:.4f}, B = {fb.upper.value:.4f}")

###############################################################################
# A small random nudge.  With lambda1 and lambda2 fixed, the smallest
# absolute constant mu that makes the closeness inequality hold comes from
# a sup over the unit sphere.

rng = np.random.default_rng(0)
Phi = G.like(G.matrix + 0.05 * rng.standard_normal(G.matrix.shape))
l1, l2 = 0.02, 0.01
mu = minimal_mu(G, Phi, l1, l2, certified=True)
k = PerturbationConstants(mu, l1, l2)
print(f"certified mu = {mu:.5f}")

###############################################################################
# The report carries the verdict, the predicted interval and the computed
# bounds of the perturbed family.

rep = verify_frame_perturbation(G, Phi, k)
print(f"verdict: {rep.verdict}, Delta = {rep.delta:.5f}")
print(f"predicted [{rep.predicted_lower:.4f}, {rep.predicted_upper:.4f}]")
print(f"actual    [{rep.actual_lower.value:.4f}, {rep.actual_upper.value:.4f}]")

###############################################################################
# In the squared-norm convention common for Hilbert frames the bounds are
# the squares, and the same constants give the classical interval.

lo, hi = hilbert_bounds_1_1(fb.lower.value**2, fb.upper.value**2, k)
print(f"squared: predicted [{lo:.4f}, {hi:.4f}], actual [{rep.actual_lower.value**2:.4f}, {rep.actual_upper.value**2:.4f}]")
