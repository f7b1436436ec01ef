"""Seeded instance generators shared by the acceptance and property tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from framelab import FrameSystem, PerturbationConstants, SpaceSpec, frame_bounds, minimal_mu
from framelab.perturbation import worst_case_residual

EXPONENTS = (1.0, 1.5, 2.0, 3.0, np.inf)
MODERATE = (1.5, 2.0, 3.0)


@dataclass
class FramePair:
    G: FrameSystem
    Phi: FrameSystem
    k: PerturbationConstants
    A: float
    B: float
    residual: float


def random_frame(rng, n, m, p, q, well_conditioned=True) -> FrameSystem:
    X, Xd = SpaceSpec(n, p), SpaceSpec(m, q)
    while True:
        M = rng.standard_normal((m, n))
        if not well_conditioned:
            return FrameSystem(M, X, Xd)
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] > 0.3 * s[0]:
            return FrameSystem(M, X, Xd)


def certified_frame_pair(rng, seed: int, exponents=MODERATE, max_dim: int = 4, margin: float = 1e-6) -> FramePair:
    """A frame ``G`` plus a small perturbation with certified constants.

    ``mu`` is the certified minimal value for randomly drawn ``lambda1,
    lambda2``; pairs are redrawn until the frame hypothesis holds with
    ``margin``.
    """
    while True:
        n = int(rng.integers(2, max_dim + 1))
        m = int(rng.integers(n, max_dim + 1))
        p, q = (float(rng.choice(exponents)) for _ in range(2))
        G = random_frame(rng, n, m, p, q)
        fb = frame_bounds(G, seed=seed)
        A, B = fb.lower.certified_low, fb.upper.certified_high
        E = rng.standard_normal((m, n))
        E *= float(rng.uniform(0.01, 0.15)) * A / np.abs(E).sum()
        Phi = G.like(G.matrix + E)
        l1, l2 = (float(v) for v in rng.uniform(0.0, 0.05, 2))
        mu = minimal_mu(G, Phi, l1, l2, seed=seed, certified=True)
        k = PerturbationConstants(mu, l1, l2)
        res = worst_case_residual(G, Phi, k, seed=seed, certified=True)
        hyp = A - (mu + l2 * (A + B) + l1 * B)
        if res <= 0 and hyp > margin:
            return FramePair(G, Phi, k, A, B, res)


# -- instances for the condition translations ------------------------------------


def signed_permutation(rng, n) -> np.ndarray:
    """An isometry of every l^p_n."""
    return np.eye(n)[rng.permutation(n)] * rng.choice([-1.0, 1.0], n)


def isometric_frame(rng, n, p, copies=1) -> np.ndarray:
    """``c`` times a stack of ``copies`` signed permutations, or an orthonormal stack when ``p = 2``."""
    c = float(rng.uniform(0.5, 2.0))
    if p == 2.0 and copies == 1:
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        return c * Q
    return c * np.vstack([signed_permutation(rng, n) for _ in range(copies)])


def small_perturbation(rng, M, size=0.05) -> np.ndarray:
    E = rng.standard_normal(M.shape)
    return M + float(rng.uniform(0.1, 1.0)) * size * np.linalg.norm(M, 2) * E / np.linalg.norm(E, 2)


def translation_instance(rng, source: str, seed: int = 0):
    """``(EquivalenceInstance, constants)`` with the source condition certified by construction.

    The free constant (``mu`` or ``lambda1``) is set from the certified upper
    end of the residual so the source condition holds.
    """
    from framelab import ConditionId as C
    from framelab import EquivalenceInstance
    from framelab.equivalence import coefficient_residual_estimate
    from framelab.perturbation import atomic_residual_estimate, residual_estimate, synthesis_residual_estimate

    src = C.parse(source)
    l1, l2 = (float(v) for v in rng.uniform(0.0, 0.1, 2))
    n = int(rng.integers(2, 4))
    if src in (C.A1, C.A13):
        m = int(rng.integers(n, 5))
        p, q = (float(rng.choice(MODERATE)) for _ in range(2))
        F = random_frame(rng, n, m, p, q)
        inst = EquivalenceInstance(F, F.like(small_perturbation(rng, F.matrix)))
        k0 = PerturbationConstants(0.0, l1, l2)
        est = (synthesis_residual_estimate if src == C.A1 else coefficient_residual_estimate)(F, inst.perturbed, k0, seed)
        return inst, k0.replace(mu=max(est.upper, 0.0))
    p = float(rng.choice(MODERATE))
    if src == C.A6:
        copies = int(rng.integers(1, 3))
        M = isometric_frame(rng, n, p, copies)
        G = FrameSystem(M, SpaceSpec(n, p), SpaceSpec(M.shape[0], p))
        S = np.linalg.pinv(M)
        if copies > 1:
            # average of the copies: ||S|| = 1/B for every p
            c = np.linalg.norm(M[:n], 2)
            S = M.T / (copies * c * c)
        inst = EquivalenceInstance(G, G.like(small_perturbation(rng, M)), S=S)
        k0 = PerturbationConstants(0.0, l1, l2)
        return inst, k0.replace(mu=max(residual_estimate(G, inst.perturbed, k0, seed).upper, 0.0))
    if src == C.A8:
        M = isometric_frame(rng, n, p)
        F = FrameSystem(M, SpaceSpec(n, p), SpaceSpec(n, p))
        inst = EquivalenceInstance(F, F.like(small_perturbation(rng, M)))
        k0 = PerturbationConstants(0.0, l1, l2)
        return inst, k0.replace(mu=max(synthesis_residual_estimate(F, inst.perturbed, k0, seed).upper, 0.0))
    if src == C.A9:
        m = int(rng.integers(n, 5))
        q = float(rng.choice(MODERATE))
        G = random_frame(rng, n, m, p, q)
        F = G.like(np.linalg.pinv(G.matrix).T)
        inst = EquivalenceInstance(F, F.like(small_perturbation(rng, F.matrix)), coefficients=G)
        mu = float(rng.uniform(0.0, 0.02))
        k0 = PerturbationConstants(mu, 0.0, l2)
        est = atomic_residual_estimate(G, F, inst.perturbed, k0, seed)
        return inst, k0.replace(lambda1=max(est.upper, 0.0))
    raise ValueError(f"no generator for {source}")
