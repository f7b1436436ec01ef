"""
Moving between forms of the closeness condition
===============================================

The same pair of families can be compared through vectors, through
coefficients or through functionals.  Constants certified in one form
translate into constants for another.
"""

import numpy as np

from framelab import ConditionId, EquivalenceInstance, FrameSystem, PerturbationConstants, check_equivalence
from framelab.perturbation import synthesis_residual_estimate

rng = np.random.default_rng(11)
F = FrameSystem.from_matrix(rng.standard_normal((3, 2)), p=3, q=1.5)
Psi = F.like(F.matrix + 0.05 * rng.standard_normal((3, 2)))
inst = EquivalenceInstance(F, Psi)

# three constants in synthesis form, mu taken from the certified residual
k0 = PerturbationConstants(0.0, 0.05, 0.1)
k = k0.replace(mu=max(synthesis_residual_estimate(F, Psi, k0).upper, 0.0))

###############################################################################
# Collapse to a single absolute constant.  The translated mu is the
# perturbation radius Delta of the source constants.

rep = check_equivalence(inst, ConditionId.A1, k, ConditionId.A11)
print(f"source {rep.source.condition.value}: {rep.source.constants}, residual {rep.source.residual.upper:.2e}")
print(f"target {rep.target.condition.value}: {rep.target.constants}, residual {rep.target.residual.upper:.2e}")
print(f"implication holds: {rep.implication_holds}")

###############################################################################
# Single-constant forms move freely between synthesis and coefficients.

k11 = rep.target.constants
rep = check_equivalence(inst, ConditionId.A11, k11, ConditionId.A12)
print(f"A11 -> A12 residual {rep.target.residual.upper:.2e}, holds: {rep.implication_holds}")
