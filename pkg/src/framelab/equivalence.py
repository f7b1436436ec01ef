"""Implications between closeness conditions, with explicit constant witnesses.

Every condition is one of four residual forms evaluated on a pair of
families:

``synthesis``    ``||sum c_i (psi_i - f_i)|| <= mu ||c|| + l1 ||sum c_i f_i|| + l2 ||sum c_i psi_i||``
``coefficient``  ``||{g(psi_i - f_i)}|| <= mu ||g|| + l1 ||{g(f_i)}|| + l2 ||{g(psi_i)}||`` for ``g`` in ``X*``
``dual``         the synthesis form for functionals, over ``d`` in ``X_d*``
``restricted``   the synthesis form for ``c = {g_i(f)}`` only (atomic decompositions)

plus strict side inequalities on the constants.  :func:`check_equivalence`
certifies the source condition, translates the constants and certifies the
target condition.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _sphere
from .errors import NotAFrameError, PreconditionError, SideConditionError, UnsupportedTranslationError
from .operators import (
    FrameSystem,
    bessel_bound,
    check_same_spaces,
    dual_synthesis_bounds,
    frame_bounds,
    op_norm,
    riesz_bounds,
    synthesis_matrix,
)
from .perturbation import (
    DEFAULT_TOL,
    PerturbationConstants,
    ResidualEstimate,
    Tolerances,
    atomic_residual_estimate,
    delta,
    residual_estimate,
    sup_of_terms,
    synthesis_residual_estimate,
)

SIDE_RTOL = 1e-9


class ConditionId(str, enum.Enum):
    A1 = "A1"
    A11 = "A11"
    A12 = "A12"
    A13 = "A13"
    A3 = "A3"
    A3a = "A3a"
    A3b = "A3b"
    A3c = "A3c"
    A6 = "A6"
    A6tilde = "A6tilde"
    A8 = "A8"
    A8tilde = "A8tilde"
    A9 = "A9"
    A9tilde = "A9tilde"

    @classmethod
    def parse(cls, value) -> "ConditionId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise UnsupportedTranslationError(f"unknown condition {value!r}", condition=str(value)) from None


C = ConditionId

FORMS = {
    C.A1: "synthesis",
    C.A11: "synthesis",
    C.A3: "synthesis",
    C.A3a: "synthesis",
    C.A8: "synthesis",
    C.A8tilde: "synthesis",
    C.A12: "coefficient",
    C.A13: "coefficient",
    C.A3b: "coefficient",
    C.A3c: "coefficient",
    C.A6: "dual",
    C.A6tilde: "dual",
    C.A9: "restricted",
    C.A9tilde: "restricted",
}

# constants a condition does not use must be zero
_ZEROED = {
    C.A11: ("lambda1", "lambda2"),
    C.A12: ("lambda1", "lambda2"),
    C.A3a: ("lambda1", "lambda2"),
    C.A3b: ("lambda1", "lambda2"),
    C.A6tilde: ("lambda1",),
    C.A8tilde: ("lambda1",),
    C.A9tilde: ("mu",),
}

SUPPORTED = {
    (C.A1, C.A11): "mu~ = Delta",
    (C.A13, C.A12): "mu~ = Delta",
    (C.A3, C.A3a): "mu~ = Delta",
    (C.A3c, C.A3b): "mu~ = Delta",
    (C.A6, C.A6tilde): "mu~ = mu + l1 B, l2~ = l2",
    (C.A8, C.A8tilde): "mu~ = mu + l1 B, l2~ = l2",
    (C.A9, C.A9tilde): "l1~ = l1 + mu B, l2~ = l2",
    (C.A11, C.A12): "mu~ unchanged (adjoint has the same norm)",
    (C.A12, C.A11): "mu~ unchanged (adjoint has the same norm)",
    (C.A3a, C.A3b): "mu~ unchanged (adjoint has the same norm)",
    (C.A3b, C.A3a): "mu~ unchanged (adjoint has the same norm)",
    (C.A11, C.A1): "same constants",
    (C.A12, C.A13): "same constants",
    (C.A3a, C.A3): "same constants",
    (C.A6tilde, C.A6): "same constants",
    (C.A8tilde, C.A8): "same constants",
    (C.A9tilde, C.A9): "mu = 0, l1 = l1~",
    (C.A3b, C.A3c): "l2 = (A - mu~) / (2 (A + B))",
}


def translate_constants(
    from_: ConditionId | str,
    to: ConditionId | str,
    k: PerturbationConstants,
    B: float,
    A: float | None = None,
) -> PerturbationConstants:
    """Constants for ``to`` implied by ``k`` satisfying ``from_``.

    ``B`` is the upper bound of the base family in the setting of the
    source condition; ``A`` is only needed for ``A3b -> A3c``.
    """
    a, b = ConditionId.parse(from_), ConditionId.parse(to)
    if (a, b) not in SUPPORTED:
        raise UnsupportedTranslationError(
            f"no translation from {a.value} to {b.value}", source=a.value, target=b.value
        )
    role = b.value
    if (a, b) in ((C.A1, C.A11), (C.A13, C.A12), (C.A3, C.A3a), (C.A3c, C.A3b)):
        return PerturbationConstants(delta(B, k), 0.0, 0.0, role)
    if (a, b) in ((C.A6, C.A6tilde), (C.A8, C.A8tilde)):
        return PerturbationConstants(k.mu + k.lambda1 * B, 0.0, k.lambda2, role)
    if (a, b) == (C.A9, C.A9tilde):
        return PerturbationConstants(0.0, k.lambda1 + k.mu * B, k.lambda2, role)
    if (a, b) == (C.A9tilde, C.A9):
        return PerturbationConstants(0.0, k.lambda1, k.lambda2, role)
    if (a, b) == (C.A3b, C.A3c):
        if A is None:
            raise ValueError("A3b -> A3c needs the lower bound A")
        return PerturbationConstants(k.mu, 0.0, max(A - k.mu, 0.0) / (2.0 * (A + B)), role)
    return k.replace(role=role)


# ---------------------------------------------------------------------------
# instances and residuals


@dataclass
class EquivalenceInstance:
    """A base family, its perturbation and, where needed, a dual or reconstruction.

    ``base``/``perturbed`` hold vectors ``f_i, psi_i`` (synthesis and
    coefficient forms) or functionals ``g_i, phi_i`` (dual form).  Atomic
    decompositions put the coefficient functionals in ``coefficients``;
    Banach-frame conditions put the reconstruction matrix in ``S``.
    """

    base: FrameSystem
    perturbed: FrameSystem
    coefficients: FrameSystem | None = None
    S: np.ndarray | None = None

    def __post_init__(self):
        check_same_spaces(self.base, self.perturbed)
        if self.coefficients is not None:
            check_same_spaces(self.base, self.coefficients)


def coefficient_residual_estimate(F: FrameSystem, Psi: FrameSystem, k: PerturbationConstants, seed: int = 0):
    """Coefficient-form residual over unit ``g`` in ``X*``."""
    check_same_spaces(F, Psi)
    out = F.space_Xd.dual().p
    terms = [
        _sphere.Term(1.0, Psi.matrix - F.matrix, out),
        _sphere.Term(-k.lambda1, F.matrix, out),
        _sphere.Term(-k.lambda2, Psi.matrix, out),
    ]
    return sup_of_terms(terms, F.space_X.dual(), -k.mu, seed)


def condition_residual(cond: ConditionId, inst: EquivalenceInstance, k: PerturbationConstants, seed: int = 0):
    form = FORMS[ConditionId.parse(cond)]
    if form == "synthesis":
        return synthesis_residual_estimate(inst.base, inst.perturbed, k, seed)
    if form == "coefficient":
        return coefficient_residual_estimate(inst.base, inst.perturbed, k, seed)
    if form == "dual":
        return residual_estimate(inst.base, inst.perturbed, k, seed)
    if inst.coefficients is None:
        raise PreconditionError(f"{cond} needs the coefficient functionals of the decomposition")
    return atomic_residual_estimate(inst.coefficients, inst.base, inst.perturbed, k, seed)


@dataclass
class _Bounds:
    A: float | None
    B: float
    extra: dict = field(default_factory=dict)


def _setting_bounds(cond: ConditionId, inst: EquivalenceInstance, seed: int) -> _Bounds:
    """Bounds of the base family in the setting the condition lives in."""
    form = FORMS[cond]
    if cond in (C.A8, C.A8tilde):
        rb = riesz_bounds(inst.base, seed=seed)
        return _Bounds(rb.lower.certified_low, rb.upper.certified_high, {"A_value": rb.lower.value, "B_value": rb.upper.value})
    if form in ("synthesis", "coefficient"):
        # X_d*-Bessel / frame bounds of g -> {g(f_i)}
        if cond in (C.A3, C.A3a, C.A3b, C.A3c):
            fb = dual_synthesis_bounds(inst.base, seed=seed)
            return _Bounds(fb.lower.certified_low, fb.upper.certified_high)
        est = op_norm(synthesis_matrix(inst.base), inst.base.space_Xd, inst.base.space_X, seed=seed)
        return _Bounds(None, est.certified_high)
    if form == "dual":
        fb = frame_bounds(inst.base, seed=seed)
        return _Bounds(fb.lower.certified_low, fb.upper.certified_high, {"A_value": fb.lower.value, "B_value": fb.upper.value})
    est = bessel_bound(inst.coefficients, seed=seed)
    return _Bounds(None, est.certified_high)


def side_margins(cond: ConditionId, k: PerturbationConstants, bounds: _Bounds, S_norm: float | None = None) -> dict:
    """Strict inequalities attached to ``cond`` (margin > 0 means satisfied)."""
    A, B = bounds.A, bounds.B
    m: dict = {}
    for name in _ZEROED.get(cond, ()):
        m[f"{name}_is_zero"] = 1.0 if getattr(k, name) == 0.0 else -1.0
    if cond in (C.A1, C.A13, C.A6, C.A6tilde, C.A8, C.A8tilde, C.A9, C.A9tilde, C.A3c):
        m["lambda2_lt_1"] = 1.0 - k.lambda2
    if cond in (C.A3, C.A3c):
        m["frame_condition"] = A - k.mu - k.lambda2 * (A + B) - k.lambda1 * B
    if cond == C.A3c:
        m["lambda2_positive"] = k.lambda2
    if cond in (C.A3a, C.A3b):
        m["mu_lt_A"] = A - k.mu
    if cond == C.A6:
        m["lambda1_plus_mu_S_lt_1"] = 1.0 - (k.lambda1 + k.mu * S_norm)
    if cond == C.A6tilde:
        # the smaller (best-found) value of B is the conservative side here
        m["mu_over_B_lt_1"] = 1.0 - k.mu / bounds.extra.get("B_value", B)
    if cond == C.A8:
        m["lambda1_plus_mu_over_A_lt_1"] = 1.0 - (k.lambda1 + k.mu / A)
    if cond == C.A8tilde:
        m["mu_over_A_lt_1"] = 1.0 - k.mu / A
    if cond == C.A9:
        m["lambda1_plus_mu_B_lt_1"] = 1.0 - (k.lambda1 + k.mu * B)
    if cond == C.A9tilde:
        m["lambda1_lt_1"] = 1.0 - k.lambda1
    return m


@dataclass
class ConditionCheck:
    condition: ConditionId
    constants: PerturbationConstants
    residual: ResidualEstimate
    margins: dict
    holds: bool

    def to_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "constants": self.constants.to_dict(),
            "residual": self.residual.to_dict(),
            "margins": dict(self.margins),
            "holds": self.holds,
        }


def check_condition(
    cond, inst: EquivalenceInstance, k: PerturbationConstants, seed: int = 0, tol: Tolerances = DEFAULT_TOL, _bounds=None, _S_norm=None
) -> ConditionCheck:
    """Certify that ``inst`` satisfies ``cond`` with constants ``k``."""
    cond = ConditionId.parse(cond)
    bounds = _bounds or _setting_bounds(cond, inst, seed)
    S_norm = _S_norm
    if cond == C.A6 and S_norm is None:
        S_norm = _reconstruction_norm(inst, seed)
    res = condition_residual(cond, inst, k, seed)
    margins = side_margins(cond, k, bounds, S_norm)
    holds = res.upper <= tol.residual and all(v > tol.hypothesis for v in margins.values())
    return ConditionCheck(cond, k, res, margins, bool(holds))


def _reconstruction_norm(inst: EquivalenceInstance, seed: int) -> float:
    if inst.S is None:
        raise PreconditionError("A6 needs the reconstruction operator S")
    S = np.asarray(inst.S, dtype=float)
    if np.max(np.abs(S @ inst.base.matrix - np.eye(inst.base.n))) > 1e-10:
        raise PreconditionError("S is not a left inverse of the analysis map")
    return op_norm(S, inst.base.space_Xd, inst.base.space_X, seed=seed).certified_high


def _check_side_conditions(a: ConditionId, inst: EquivalenceInstance, seed: int) -> dict:
    """Hypotheses under which the conditional equivalences hold."""
    out: dict = {}
    if a in (C.A6, C.A6tilde):
        S = np.asarray(inst.S, dtype=float) if inst.S is not None else None
        if S is None:
            raise PreconditionError("A6 needs the reconstruction operator S")
        s = op_norm(S, inst.base.space_Xd, inst.base.space_X, seed=seed).value
        B = bessel_bound(inst.base, seed=seed).value
        out["S_norm"], out["B"] = s, B
        if not math.isclose(s * B, 1.0, rel_tol=SIDE_RTOL, abs_tol=0.0):
            raise SideConditionError(
                f"the equivalence needs ||S|| = 1/B, got ||S|| B = {s * B:.12g}",
                hypothesis="||S|| = 1/B",
                S_norm=s,
                B=B,
            )
    if a in (C.A8, C.A8tilde):
        rb = riesz_bounds(inst.base, seed=seed)
        A, B = rb.lower.value, rb.upper.value
        out["A"], out["B"] = A, B
        if not math.isclose(A, B, rel_tol=SIDE_RTOL, abs_tol=0.0):
            raise SideConditionError(
                f"the equivalence needs A = B, got A = {A:.12g}, B = {B:.12g}", hypothesis="A = B", A=A, B=B
            )
    return out


@dataclass
class EquivalenceReport:
    source: ConditionCheck
    target: ConditionCheck
    rule: str
    side_conditions: dict

    @property
    def implication_holds(self) -> bool:
        """Source certified and target certified with the translated constants."""
        return self.source.holds and self.target.holds

    def to_dict(self) -> dict:
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "rule": self.rule,
            "side_conditions": dict(self.side_conditions),
            "implication_holds": self.implication_holds,
        }


def check_equivalence(
    inst: EquivalenceInstance,
    cond_a,
    k_a: PerturbationConstants,
    cond_b,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
) -> EquivalenceReport:
    """Certify ``cond_a`` with ``k_a``, translate, certify ``cond_b``.

    Raises :class:`SideConditionError` when a conditional equivalence is
    asked for outside its hypotheses.
    """
    a, b = ConditionId.parse(cond_a), ConditionId.parse(cond_b)
    if (a, b) not in SUPPORTED:
        raise UnsupportedTranslationError(f"no translation from {a.value} to {b.value}", source=a.value, target=b.value)
    side = _check_side_conditions(a, inst, seed)
    bounds = _setting_bounds(a, inst, seed)
    source = check_condition(a, inst, k_a, seed, tol, _bounds=bounds)
    k_b = translate_constants(a, b, k_a, bounds.B, bounds.A)
    target = check_condition(b, inst, k_b, seed, tol)
    return EquivalenceReport(source, target, SUPPORTED[(a, b)], side)


# ---------------------------------------------------------------------------
# the mu~ < A threshold for frames


@dataclass
class ThresholdReport:
    A: float
    B: float
    mu_star: float
    applicable: bool
    predicted_lower: float | None
    actual_lower: float | None
    lower_ok: bool | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_frame_mu_threshold(
    F: FrameSystem, Psi: FrameSystem, seed: int = 0, tol: Tolerances = DEFAULT_TOL
) -> ThresholdReport:
    """Single-constant closeness ``mu~*`` and whether ``mu~* < A`` keeps a frame.

    Bounds are those of ``g -> {g(f_i)}`` on ``X*``; ``mu~*`` is the norm of
    the difference synthesis map.
    """
    bounds = dual_synthesis_bounds(F, seed=seed)
    if bounds.lower.value <= 0.0:
        raise NotAFrameError("F is not a frame: lower bound is 0", status=bounds.status)
    A, B = bounds.lower.certified_low, bounds.upper.certified_high
    k0 = PerturbationConstants()
    est = synthesis_residual_estimate(F, Psi, k0, seed)
    mu_star = max(est.upper, 0.0)
    applicable = A - mu_star > tol.hypothesis
    if not applicable:
        return ThresholdReport(A, B, mu_star, False, None, None, None)
    actual = dual_synthesis_bounds(Psi, seed=seed).lower.value
    pred = A - mu_star
    return ThresholdReport(A, B, mu_star, True, pred, actual, bool(actual >= pred - tol.bound(pred)))


__all__ = [
    "ConditionCheck",
    "ConditionId",
    "EquivalenceInstance",
    "EquivalenceReport",
    "FORMS",
    "SUPPORTED",
    "ThresholdReport",
    "check_condition",
    "check_equivalence",
    "check_frame_mu_threshold",
    "coefficient_residual_estimate",
    "condition_residual",
    "side_margins",
    "translate_constants",
]
