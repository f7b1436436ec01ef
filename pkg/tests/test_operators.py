import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from framelab import (
    DimensionError,
    FrameSystem,
    NonFiniteError,
    SpaceSpec,
    bessel_bound,
    check_neumann_invertibility,
    frame_bounds,
    lower_bound,
    op_norm,
    riesz_bounds,
)
from framelab.operators import analytic_upper, exact_op_norm, numerical_rank
from framelab.oracles import brute_lower_bound, brute_op_norm, covering_radius
from framelab.spaces import INF, dual_exponent

EXPONENTS = [1.0, 1.5, 2.0, 3.0, INF]


def sp(dim, p):
    return SpaceSpec(dim, p)


# -- op_norm -----------------------------------------------------------------


def test_identity_is_an_isometry():
    est = op_norm(np.eye(2), sp(2, 2), sp(2, 2))
    assert est.value == 1.0 and est.exact


def test_max_column_norm_from_l1():
    est = op_norm([[3, 0], [4, 0]], sp(2, 1), sp(2, 2))
    assert est.value == pytest.approx(5.0)
    assert est.exact


def test_p3_norm_matches_dense_brute_force():
    M = np.array([[1.0, 2.0], [2.0, 1.0]])
    est = op_norm(M, sp(2, 3), sp(2, 3))
    # 1.2e6 deterministic directions on the l^3 circle
    theta = np.linspace(0.0, np.pi, 1_200_000, endpoint=False)
    V = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    V /= (np.abs(V) ** 3).sum(axis=1, keepdims=True) ** (1 / 3)
    brute = ((np.abs(V @ M.T) ** 3).sum(axis=1) ** (1 / 3)).max()
    assert est.value == pytest.approx(brute, rel=1e-3)
    assert est.certified_low - 1e-12 <= brute <= est.certified_high + 1e-12


def test_zero_matrix_has_norm_zero():
    est = op_norm(np.zeros((3, 2)), sp(2, 3), sp(3, 1.5))
    assert est.value == 0.0 and est.exact


def test_nan_entries_are_rejected():
    with pytest.raises(NonFiniteError):
        op_norm([[1.0, np.nan]], sp(2, 2), sp(1, 2))


def test_shape_must_match_spaces():
    with pytest.raises(DimensionError):
        op_norm(np.eye(3), sp(2, 2), sp(2, 2))


@pytest.mark.parametrize("p", EXPONENTS)
@pytest.mark.parametrize("q", EXPONENTS)
def test_sandwich_against_oracle(p, q):
    rng = np.random.default_rng(int(10 * p) % 97 + int(3 * q) % 89 if np.isfinite(p + q) else 5)
    M = rng.standard_normal((3, 3))
    est = op_norm(M, sp(3, p), sp(3, q), seed=1)
    brute = brute_op_norm(M, sp(3, p), sp(3, q), resolution=120)
    assert est.certified_low <= est.value <= est.certified_high
    assert est.certified_low - 1e-3 * est.value <= brute.value <= est.certified_high + 1e-3 * est.value


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.sampled_from(EXPONENTS))
def test_homogeneity(seed, c, p):
    M = np.random.default_rng(seed).standard_normal((3, 2))
    a = op_norm(M, sp(2, p), sp(3, 3), seed=0).value
    b = op_norm(c * M, sp(2, p), sp(3, 3), seed=0).value
    assert b == pytest.approx(abs(c) * a, rel=1e-10)


def test_consistency_with_singular_values():
    M = np.random.default_rng(4).standard_normal((5, 3))
    s = np.linalg.svd(M, compute_uv=False)
    assert op_norm(M, sp(3, 2), sp(5, 2)).value == pytest.approx(s[0], rel=1e-9)
    assert lower_bound(M, sp(3, 2), sp(5, 2)).value == pytest.approx(s[-1], rel=1e-9)


@pytest.mark.parametrize("p, q", [(1.5, 3.0), (3.0, 1.5), (1.0, 2.0), (2.0, INF), (4.0, 1.2)])
def test_adjoint_duality(p, q):
    M = np.random.default_rng(7).standard_normal((3, 3))
    a = op_norm(M, sp(3, p), sp(3, q), seed=0).value
    b = op_norm(M.T, sp(3, dual_exponent(q)), sp(3, dual_exponent(p)), seed=0).value
    assert a == pytest.approx(b, rel=1e-6)


def test_exact_closed_forms():
    M = np.array([[1.0, -2.0], [3.0, 0.5]])
    assert exact_op_norm(M, 1.0, 3.0)[0] == pytest.approx(max(np.linalg.norm(M, 3, axis=0)))
    assert exact_op_norm(M, 3.0, INF)[0] == pytest.approx(max(np.linalg.norm(M, 1.5, axis=1)))
    assert exact_op_norm(M, 3.0, 3.0) is None


def test_analytic_upper_is_an_upper_bound():
    rng = np.random.default_rng(2)
    for _ in range(20):
        M = rng.standard_normal((3, 2))
        p, q = rng.choice([1.5, 2.0, 3.0, 4.0], 2)
        assert analytic_upper(M, p, q) >= op_norm(M, sp(2, p), sp(3, q)).value - 1e-12


# -- lower_bound ---------------------------------------------------------------


def test_lower_bound_of_diagonal():
    assert lower_bound(np.diag([1.0, 2.0]), sp(2, 2), sp(2, 2)).value == pytest.approx(1.0)


def test_rank_deficient_lower_bound_is_exactly_zero():
    est = lower_bound([[1.0, 0.0], [2.0, 0.0]], sp(2, 3), sp(2, 1.5))
    assert est.value == 0.0 and est.method == "rank-deficient"


def test_lower_bound_against_eigenvalues():
    M = np.array([[1.0, 1.0], [1.0, -1.0], [0.0, 1.0]])
    expected = np.sqrt(np.linalg.eigvalsh(M.T @ M)[0])
    assert lower_bound(M, sp(2, 2), sp(3, 2)).value == pytest.approx(expected, rel=1e-12)


def test_lower_bound_against_oracle_p3():
    M = np.random.default_rng(9).standard_normal((2, 2))
    est = lower_bound(M, sp(2, 3), sp(2, 3))
    brute = brute_lower_bound(M, sp(2, 3), sp(2, 3), resolution=4000)
    assert est.certified_low <= brute.value + 1e-12
    assert brute.value == pytest.approx(est.value, rel=1e-3, abs=brute.gap)


def test_numerical_rank():
    assert numerical_rank(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1
    assert numerical_rank(np.eye(3)) == 3


# -- frame level ----------------------------------------------------------------


def test_bessel_bound_examples():
    assert bessel_bound(FrameSystem.from_matrix(np.eye(3))).value == pytest.approx(1.0)
    assert bessel_bound(FrameSystem.from_matrix(2 * np.eye(3))).value == pytest.approx(2.0)
    M = np.random.default_rng(0).standard_normal((4, 3))
    assert bessel_bound(FrameSystem.from_matrix(M)).value == pytest.approx(np.linalg.svd(M)[1][0], rel=1e-12)


def test_frame_bounds_of_orthonormal_basis():
    fb = frame_bounds(FrameSystem.from_matrix(np.eye(2)))
    assert (fb.lower.value, fb.upper.value) == pytest.approx((1.0, 1.0))
    assert fb.is_frame


def test_frame_bounds_of_repeated_vector():
    fb = frame_bounds(FrameSystem.from_matrix([[1, 0], [1, 0], [0, 1]]))
    # Gram eigenvalues {2, 1}
    assert fb.lower.value == pytest.approx(1.0)
    assert fb.upper.value == pytest.approx(np.sqrt(2.0))


def test_rank_deficient_family_is_not_a_frame():
    fb = frame_bounds(FrameSystem.from_matrix([[1, 0], [2, 0]], p=3, q=3))
    assert fb.lower.value == 0.0
    assert not fb.is_frame
    assert fb.status == "not a frame"


def test_riesz_bounds_examples():
    rb = riesz_bounds(FrameSystem.from_matrix(np.eye(2)))
    assert (rb.lower.value, rb.upper.value) == pytest.approx((1.0, 1.0))
    rb = riesz_bounds(FrameSystem.from_matrix(np.diag([1.0, 3.0])))
    assert (rb.lower.value, rb.upper.value) == pytest.approx((1.0, 3.0))
    M = np.array([[1.0, 1.0], [0.0, 1.0]])
    s = np.linalg.svd(M, compute_uv=False)
    rb = riesz_bounds(FrameSystem.from_matrix(M.T))
    assert (rb.lower.value, rb.upper.value) == pytest.approx((s[1], s[0]), rel=1e-12)
    assert rb.is_riesz_basis


def test_redundant_family_is_not_a_riesz_basis():
    rb = riesz_bounds(FrameSystem.from_matrix([[1, 0], [0, 1], [1, 1]]))
    assert not rb.is_riesz_basis


# -- invertibility certificate ---------------------------------------------------


def test_identity_certificate():
    cert = check_neumann_invertibility(np.eye(3), sp(3, 2))
    assert (cert.lambda1, cert.lambda2) == (0.0, 0.0)
    assert (cert.inverse_lower, cert.inverse_upper) == (1.0, 1.0)


def test_half_identity_certificate():
    cert = check_neumann_invertibility(0.5 * np.eye(2), sp(2, 2))
    assert cert.lambda1 == pytest.approx(0.5) and cert.lambda2 == 0.0
    assert cert.inverse_lower == pytest.approx(1 / 1.5)
    assert cert.inverse_upper == pytest.approx(2.0)
    assert cert.contains(2.0, tol=1e-12)


def test_small_perturbation_of_identity():
    rng = np.random.default_rng(1)
    N = rng.standard_normal((3, 3))
    N *= 0.3 / np.linalg.norm(N, 2)
    G = np.eye(3) + N
    cert = check_neumann_invertibility(G, sp(3, 2))
    assert cert is not None
    assert np.linalg.norm(np.linalg.inv(G), 2) <= 1 / 0.7 + 1e-12
    assert cert.inverse_upper == pytest.approx(1 / 0.7)


def test_far_from_identity_has_no_certificate():
    assert check_neumann_invertibility(np.array([[0.0, 1.0], [1.0, 0.0]]) * 5, sp(2, 2)) is None


def test_non_square_is_rejected():
    with pytest.raises(DimensionError):
        check_neumann_invertibility(np.ones((2, 3)), sp(2, 2))


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, INF])
def test_bracket_contains_true_inverse_ratios(p):
    rng = np.random.default_rng(int(p) if np.isfinite(p) else 99)
    N = rng.standard_normal((3, 3))
    N *= 0.4 / np.abs(N).sum()
    G = np.eye(3) + N
    cert = check_neumann_invertibility(G, sp(3, p))
    assert cert is not None
    x = rng.standard_normal((100, 3))
    y = np.linalg.solve(G, x.T).T
    ratio = np.linalg.norm(y, p, axis=1) / np.linalg.norm(x, p, axis=1)
    assert np.all(cert.inverse_lower - 1e-9 <= ratio)
    assert np.all(ratio <= cert.inverse_upper + 1e-9)


def test_oracle_gap_shrinks_with_resolution():
    s = sp(3, 3)
    assert covering_radius(s, 200) < covering_radius(s, 100)
    assert_allclose(covering_radius(sp(2, 2), 720), covering_radius(sp(2, 2), 720))
