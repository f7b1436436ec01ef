import numpy as np
import pytest

from framelab import (
    ConditionId,
    EquivalenceInstance,
    FrameSystem,
    NotAFrameError,
    PerturbationConstants,
    SideConditionError,
    UnsupportedTranslationError,
    check_equivalence,
    check_frame_mu_threshold,
    minimal_mu,
    translate_constants,
)
from framelab.equivalence import SUPPORTED, check_condition, coefficient_residual_estimate
from framelab.perturbation import ZERO

K = PerturbationConstants
C = ConditionId


def family(M, p=2.0, q=2.0):
    return FrameSystem.from_matrix(np.asarray(M, dtype=float), p, q)


def test_translate_A8():
    k = translate_constants("A8", "A8tilde", K(0.1, 0.2, 0.3), B=2.0)
    assert (k.mu, k.lambda1, k.lambda2) == pytest.approx((0.5, 0.0, 0.3))


def test_translate_A9():
    k = translate_constants("A9", "A9tilde", K(0.1, 0.2, 0.3), B=2.0)
    assert (k.mu, k.lambda1, k.lambda2) == pytest.approx((0.0, 0.4, 0.3))


def test_translate_A1_zero_constants():
    assert translate_constants(C.A1, C.A11, ZERO, B=3.0).mu == 0.0


def test_translate_A1_delta():
    assert translate_constants(C.A1, C.A11, K(0.1, 0.1, 0.2), B=2.0).mu == pytest.approx(0.875)


def test_unsupported_pair():
    with pytest.raises(UnsupportedTranslationError):
        translate_constants(C.A11, C.A9, ZERO, B=1.0)
    with pytest.raises(UnsupportedTranslationError):
        ConditionId.parse("A99")


@pytest.mark.parametrize("pair", sorted(SUPPORTED, key=lambda ab: (ab[0].value, ab[1].value)))
def test_identical_pair_holds_with_zero_constants(pair):
    a, b = pair
    rng = np.random.default_rng(0)
    if a in (C.A8, C.A8tilde):
        base = family(1.5 * np.eye(2))
    elif a in (C.A6, C.A6tilde):
        base = family(np.vstack([np.eye(2), np.eye(2)]), 3, 3)
    else:
        base = family(rng.standard_normal((3, 2)), 1.5, 3)
    coeff = S = None
    if a in (C.A9, C.A9tilde):
        coeff = base
        base = base.like(np.linalg.pinv(base.matrix).T)
    if a in (C.A6, C.A6tilde):
        S = np.hstack([np.eye(2), np.eye(2)]) / 2.0
    inst = EquivalenceInstance(base, base, coefficients=coeff, S=S)
    rep = check_equivalence(inst, a, ZERO, b)
    assert rep.source.residual.upper <= 1e-8
    assert rep.target.residual.upper <= 1e-8


def test_A1_to_A11_with_known_delta():
    F = family(np.eye(2))
    Psi = F.like(np.array([[1.05, 0.0], [0.0, 0.95]]))
    k = K(0.1, 0.1, 0.2)
    assert check_condition(C.A1, EquivalenceInstance(F, Psi), k).holds
    rep = check_equivalence(EquivalenceInstance(F, Psi), C.A1, k, C.A11)
    assert rep.target.constants.mu == pytest.approx(delta_expected(1.0, k))
    assert rep.implication_holds


def delta_expected(B, k):
    return (B * (k.lambda1 + k.lambda2) + k.mu) / (1 - k.lambda2)


def test_A13_to_A12():
    rng = np.random.default_rng(1)
    F = family(rng.standard_normal((3, 3)), 3, 1.5)
    Psi = F.like(F.matrix + 0.05 * rng.standard_normal((3, 3)))
    k0 = K(0.0, 0.0, 0.5)
    mu = max(coefficient_residual_estimate(F, Psi, k0).upper, 0.0)
    rep = check_equivalence(EquivalenceInstance(F, Psi), C.A13, k0.replace(mu=mu), C.A12)
    assert rep.source.holds
    assert rep.target.residual.upper <= 1e-8


def test_A11_and_A12_minimal_constants_agree():
    rng = np.random.default_rng(2)
    F = family(rng.standard_normal((3, 2)), 1.5, 3)
    Psi = F.like(F.matrix + 0.1 * rng.standard_normal((3, 2)))
    synthesis = minimal_mu(F, Psi, form="synthesis")
    coefficient = coefficient_residual_estimate(F, Psi, ZERO).value
    assert coefficient == pytest.approx(synthesis, rel=1e-6)


def test_A8_requires_equal_bounds():
    F = family(np.diag([1.0, 2.0]))
    with pytest.raises(SideConditionError) as err:
        check_equivalence(EquivalenceInstance(F, F), C.A8, ZERO, C.A8tilde)
    assert err.value.context["hypothesis"] == "A = B"


def test_A6_requires_S_norm_one_over_B():
    G = family(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    S = np.linalg.pinv(G.matrix)
    with pytest.raises(SideConditionError) as err:
        check_equivalence(EquivalenceInstance(G, G, S=S), C.A6, ZERO, C.A6tilde)
    assert err.value.context["hypothesis"] == "||S|| = 1/B"


def test_A6_on_duplication_embedding():
    c = 1.3
    G = family(c * np.vstack([np.eye(2), np.eye(2)]), 3, 3)
    S = np.hstack([np.eye(2), np.eye(2)]) / (2 * c)
    rng = np.random.default_rng(3)
    Phi = G.like(G.matrix + 0.02 * rng.standard_normal(G.matrix.shape))
    l1, l2 = 0.05, 0.05
    k = K(minimal_mu(G, Phi, l1, l2, certified=True), l1, l2)
    rep = check_equivalence(EquivalenceInstance(G, Phi, S=S), C.A6, k, C.A6tilde)
    assert rep.source.holds and rep.target.residual.upper <= 1e-8
    assert rep.side_conditions["S_norm"] * rep.side_conditions["B"] == pytest.approx(1.0, rel=1e-9)


def test_A3b_to_A3c_picks_positive_lambda2():
    F = family(np.eye(2))
    Psi = F.like(np.array([[1.0, 0.2], [0.0, 1.0]]))
    k = K(0.25)
    rep = check_equivalence(EquivalenceInstance(F, Psi), C.A3b, k, C.A3c)
    assert rep.target.constants.lambda2 > 0
    assert rep.implication_holds


def test_threshold_identical_pair():
    F = family(np.eye(2))
    rep = check_frame_mu_threshold(F, F)
    assert rep.mu_star == 0.0 and rep.applicable


def test_threshold_half_perturbation():
    F = family(np.eye(2))
    Psi = F.like(0.5 * np.eye(2))
    rep = check_frame_mu_threshold(F, Psi)
    assert rep.mu_star == pytest.approx(0.5)
    assert rep.predicted_lower == pytest.approx(0.5)
    assert rep.actual_lower >= 0.5 - 1e-12
    assert rep.lower_ok


def test_threshold_boundary_case_makes_no_claim():
    F = family(np.eye(2))
    rep = check_frame_mu_threshold(F, F.like(np.zeros((2, 2))))
    assert rep.mu_star == pytest.approx(1.0)
    assert not rep.applicable
    assert rep.predicted_lower is None


def test_threshold_needs_a_frame():
    F = family([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(NotAFrameError):
        check_frame_mu_threshold(F, F)


def test_report_serializes():
    import json

    F = family(np.eye(2))
    rep = check_equivalence(EquivalenceInstance(F, F), C.A11, ZERO, C.A12)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert doc["implication_holds"] is True
    assert doc["source"]["condition"] == "A11"
