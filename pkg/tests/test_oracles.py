import numpy as np
import pytest
from numpy.testing import assert_allclose

from framelab import FrameSystem, OracleLimitError, PerturbationConstants, SpaceSpec
from framelab.oracles import (
    brute_lower_bound,
    brute_op_norm,
    brute_residual,
    brute_synthesis_residual,
    grid_size,
)
from framelab.perturbation import synthesis_residual, worst_case_residual
from framelab.spaces import INF


def sp(dim, p):
    return SpaceSpec(dim, p)


@pytest.mark.parametrize("resolution", [4, 37, 720])
def test_identity(resolution):
    assert brute_op_norm(np.eye(2), sp(2, 2), sp(2, 2), resolution).value == pytest.approx(1.0)


def test_extreme_point_hit_is_exact():
    res = brute_op_norm([[3, 0], [4, 0]], sp(2, 1), sp(2, 2), resolution=7)
    assert res.value == 5.0


def test_p4_reference_value_brackets_the_optimizer():
    from framelab import op_norm

    M = np.random.default_rng(0).standard_normal((3, 3))
    ref = brute_op_norm(M, sp(3, 4), sp(3, 4), resolution=200)
    est = op_norm(M, sp(3, 4), sp(3, 4))
    # the grid value under-estimates the sup by at most the gap
    assert ref.value <= est.certified_high + 1e-12
    assert est.value <= ref.value + ref.gap


def test_lower_bound_of_diagonal():
    assert brute_lower_bound(np.diag([1.0, 2.0]), sp(2, 2), sp(2, 2)).value == pytest.approx(1.0)


def test_rank_deficient_lower_bound_within_gap_of_zero():
    res = brute_lower_bound([[1.0, 1.0], [2.0, 2.0]], sp(2, 3), sp(2, 3), resolution=101)
    assert 0.0 <= res.value <= res.gap


def test_random_lower_bound_reference():
    from framelab import lower_bound

    M = np.random.default_rng(5).standard_normal((2, 2))
    ref = brute_lower_bound(M, sp(2, 3), sp(2, 3))
    est = lower_bound(M, sp(2, 3), sp(2, 3))
    assert ref.value - ref.gap <= est.value <= ref.value + 1e-12


@pytest.mark.parametrize("p", [1.5, 3.0, INF])
def test_monotone_refinement(p):
    M = np.random.default_rng(2).standard_normal((3, 3))
    s = sp(3, p)
    hi = [brute_op_norm(M, s, s, r).value for r in (20, 40, 80)]
    lo = [brute_lower_bound(M, s, s, r).value for r in (20, 40, 80)]
    assert hi[0] <= hi[1] <= hi[2]
    assert lo[0] >= lo[1] >= lo[2]


def test_dimension_limit():
    with pytest.raises(OracleLimitError):
        brute_op_norm(np.eye(5), sp(5, 2), sp(5, 2))


def test_grid_size():
    assert grid_size(2, 720) == 1440
    assert grid_size(3, 10) == 11 * 20


def test_residual_of_unperturbed_pair_is_minus_mu():
    G = FrameSystem.from_matrix(np.random.default_rng(1).standard_normal((3, 2)))
    k = PerturbationConstants(0.3, 0.0, 0.0)
    assert brute_residual(G, G, k, 90).value == pytest.approx(-0.3)


def test_matched_mu_residual_is_nonpositive():
    G = FrameSystem.from_matrix(np.eye(2))
    E = np.array([[0.1, -0.2], [0.05, 0.3]])
    E *= 0.3 / np.linalg.norm(E, 2)
    Phi = G.like(G.matrix + E)
    assert brute_residual(G, Phi, PerturbationConstants(0.3), 720).value <= 1e-12


def test_zero_constants_residual_matches_optimizer():
    rng = np.random.default_rng(3)
    G = FrameSystem.from_matrix(rng.standard_normal((3, 2)), p=3, q=1.5)
    Phi = G.like(G.matrix + 0.1 * rng.standard_normal((3, 2)))
    ref = brute_residual(G, Phi, PerturbationConstants(0.0), 180)
    est = worst_case_residual(G, Phi, PerturbationConstants(0.0))
    assert ref.value <= est + 1e-12
    assert est <= ref.value + ref.gap


def test_synthesis_residual_matches_optimizer():
    rng = np.random.default_rng(8)
    F = FrameSystem.from_matrix(rng.standard_normal((3, 3)), p=1.5, q=3)
    Psi = F.like(F.matrix + 0.1 * rng.standard_normal((3, 3)))
    k = PerturbationConstants(0.05, 0.1, 0.1)
    ref = brute_synthesis_residual(F, Psi, k, 120)
    est = synthesis_residual(F, Psi, k)
    assert_allclose(est, ref.value, atol=ref.gap)
