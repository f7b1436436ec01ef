"""Closeness conditions between two families and the bounds they imply.

Two residual forms are used throughout:

* dual form -- for functionals ``{g_i}``, ``{phi_i}`` in ``X*``, over unit
  ``d`` in ``X_d*``::

      ||sum d_i (phi_i - g_i)|| - mu ||d|| - l1 ||sum d_i g_i|| - l2 ||sum d_i phi_i||

* synthesis form -- for vectors ``{f_i}``, ``{psi_i}`` in ``X``, the same
  expression over unit ``c`` in ``X_d``.

A condition holds iff the supremum of its residual is ``<= 0``.  Each
``verify_*`` function checks the hypotheses of one perturbation result,
evaluates the bounds it predicts, computes the actual bounds of the
perturbed family and returns a :class:`TheoremReport`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import _sphere
from .errors import ConstantsError, DimensionError, NotAFrameError, NotARieszBasisError, PreconditionError
from .operators import (
    BoundsEstimate,
    FrameSystem,
    analytic_upper,
    bessel_bound,
    check_neumann_invertibility,
    check_same_spaces,
    frame_bounds,
    lower_bound,
    numerical_rank,
    op_norm,
    riesz_bounds,
    synthesis_matrix,
)
from .spaces import SpaceSpec, pnorm

THEOREM_IDS = (
    "bessel_3_1",
    "frame_3_3",
    "banach_frame_3_6",
    "banach_frame_proj_3_7",
    "riesz_3_8",
    "atomic_3_9",
    "atomic_3_10",
    "operator_pert_cc",
    "hilbert_1_1",
)
VERDICTS = ("verified", "hypothesis_fails", "bound_violated")


@dataclass(frozen=True)
class PerturbationConstants:
    """``(mu, lambda1, lambda2)``; ``role`` tells which condition they belong to."""

    mu: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    role: str = "P"

    def __post_init__(self):
        for name in ("mu", "lambda1", "lambda2"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ConstantsError(f"{name} must be a finite number >= 0, got {v}", field=name)
            object.__setattr__(self, name, v)

    @classmethod
    def from_dict(cls, d: dict, role: str = "P") -> "PerturbationConstants":
        """Accepts ``mu/lambda1/lambda2`` or the operator names ``nu/beta1/beta2``."""
        if any(k in d for k in ("nu", "beta1", "beta2")):
            return cls(d.get("nu", 0.0), d.get("beta1", 0.0), d.get("beta2", 0.0), role="beta")
        return cls(d.get("mu", 0.0), d.get("lambda1", 0.0), d.get("lambda2", 0.0), role=role)

    def replace(self, **kw) -> "PerturbationConstants":
        vals = {"mu": self.mu, "lambda1": self.lambda1, "lambda2": self.lambda2, "role": self.role}
        vals.update(kw)
        return PerturbationConstants(**vals)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "lambda1": self.lambda1, "lambda2": self.lambda2, "role": self.role}


ZERO = PerturbationConstants()


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-8  # a residual <= this counts as "condition holds"
    bound_abs: float = 1e-6
    bound_rel: float = 1e-6
    hypothesis: float = 1e-9  # strict inequalities need margin > this
    identity: float = 1e-8  # reconstruction identities

    def bound(self, scale: float) -> float:
        return self.bound_abs + self.bound_rel * abs(scale)

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "bound_abs": self.bound_abs,
            "bound_rel": self.bound_rel,
            "hypothesis": self.hypothesis,
            "identity": self.identity,
        }


DEFAULT_TOL = Tolerances()


def delta(B: float, k: PerturbationConstants) -> float:
    """``(B (l1 + l2) + mu) / (1 - l2)``."""
    if k.lambda2 >= 1.0:
        raise ConstantsError(f"lambda2 must be < 1, got {k.lambda2}", lambda2=k.lambda2)
    if B < 0:
        raise ValueError("B must be >= 0")
    return (B * (k.lambda1 + k.lambda2) + k.mu) / (1.0 - k.lambda2)


# ---------------------------------------------------------------------------
# residuals


@dataclass
class ResidualEstimate:
    """Best residual found and a certified upper bound on its supremum."""

    value: float
    upper: float
    certified_tight: bool
    method: str = ""
    evaluations: int = 0

    def holds(self, tol: float = DEFAULT_TOL.residual) -> bool:
        return self.upper <= tol

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "upper": self.upper,
            "certified_tight": self.certified_tight,
            "method": self.method,
            "evaluations": int(self.evaluations),
        }


MERGE_TOL = 1e-12


def canonical_terms(terms, source: SpaceSpec):
    """Merge proportional terms so exact cancellations vanish before optimizing.

    Each matrix is scaled to unit max-entry with its first nonzero entry
    positive (``||c L x|| = |c| ||L x||``).  Matrices that agree up to
    rounding (``MERGE_TOL``) are merged; the remainder ``R`` is charged to
    the constant as ``|w| ||R||``, so the merged objective still bounds the
    original from above.  Rank-one matrices ``c r^T`` become the single
    row ``||c|| r^T``, so terms that only see the same functional merge too.
    Identity terms measured in the source norm are constant on the sphere
    and also go into the constant.
    """
    merged: list = []  # [weight, L, p]
    constant = 0.0
    eye = np.eye(source.dim)
    for t in terms:
        L = np.asarray(t.matrix, dtype=float)
        t_p = 2.0 if L.shape[0] == 1 else t.p  # a scalar has one norm
        if L.shape[0] > 1 and t.weight != 0.0 and np.any(L):
            # rank one: ||c r^T x||_s = ||c||_s |r.x|, a single row
            i = int(np.argmax(np.abs(L).sum(axis=1)))
            r = L[i]
            c = L @ r / (r @ r)
            rest = L - np.outer(c, r)
            if np.max(np.abs(rest)) <= MERGE_TOL * np.max(np.abs(L)):
                constant += abs(t.weight) * analytic_upper(rest, source.p, t.p)
                L = (float(pnorm(c, t.p)) * r)[None, :]
                t_p = 2.0
        scale = float(np.max(np.abs(L))) if L.size else 0.0
        if t.weight == 0.0 or scale == 0.0:
            continue
        L = L / scale
        flat = L.ravel()
        if flat[np.flatnonzero(np.abs(flat) > MERGE_TOL)[0]] < 0:
            L = -L
        w = t.weight * scale
        if t_p == source.p and L.shape == eye.shape and np.max(np.abs(L - eye)) <= MERGE_TOL:
            constant += w + abs(w) * analytic_upper(L - eye, source.p, t_p)
            continue
        for entry in merged:
            if entry[2] == t_p and entry[1].shape == L.shape and np.max(np.abs(entry[1] - L)) <= MERGE_TOL:
                constant += abs(w) * analytic_upper(L - entry[1], source.p, t_p)
                entry[0] += w
                break
        else:
            merged.append([w, L, t_p])
    out = [_sphere.Term(w, L, p) for w, L, p in merged if w != 0.0]
    return out, constant


_cache = _sphere.LRUCache(512)


def sup_of_terms(terms, source: SpaceSpec, offset: float = 0.0, seed: int = 0) -> ResidualEstimate:
    """Bracket ``sup_{||x||=1} sum w ||L x|| + offset``.

    Branch and bound certifies the supremum up to dim 4.  Above that the
    upper value is the sum of analytic over-bounds of the positive terms
    minus certified lower bounds of the negative ones.  Results are cached
    without the offset, so scanning ``mu`` costs one optimization.
    """
    terms, constant = canonical_terms(terms, source)
    offset += constant
    if not terms:
        return ResidualEstimate(offset, offset, True, "constant")
    key = (source, seed) + _sphere.terms_key(terms)
    base = _cache.get(key)
    if base is None:
        base = _sup_uncached(terms, source, seed)
        _cache.put(key, base)
    return dataclasses.replace(base, value=base.value + offset, upper=base.upper + offset)


def _sup_uncached(terms, source: SpaceSpec, seed: int) -> ResidualEstimate:
    positive = [t for t in terms if t.weight > 0]
    if len(terms) == 1 and not positive:
        # w ||Lx|| with w < 0 peaks where ||Lx|| is smallest
        t = terms[0]
        est = lower_bound(t.matrix, source, SpaceSpec(t.matrix.shape[0], t.p), seed=seed)
        return ResidualEstimate(
            t.weight * est.value,
            t.weight * est.certified_low,
            est.exact,
            est.method,
            est.evaluations,
        )
    if len(terms) == 1 and positive:
        t = terms[0]
        est = op_norm(t.matrix, source, SpaceSpec(t.matrix.shape[0], t.p), seed=seed)
        return ResidualEstimate(
            t.weight * est.value,
            t.weight * est.certified_high,
            est.exact,
            est.method,
            est.evaluations,
        )
    obj = _sphere.SphereObjective(terms, source.p)
    res = _sphere.sup_on_sphere(obj, seed=seed)
    if res.upper is not None:
        tight = not res.notes.get("budget_exhausted", False)
        return ResidualEstimate(res.value, res.upper, tight, res.method, res.evaluations)
    upper = 0.0
    for t in terms:
        target = SpaceSpec(t.matrix.shape[0], t.p)
        if t.weight > 0:
            upper += t.weight * analytic_upper(t.matrix, source.p, t.p)
        else:
            upper += t.weight * lower_bound(t.matrix, source, target, seed=seed).certified_low
    return ResidualEstimate(res.value, max(upper, res.value), False, res.method + "+analytic", res.evaluations)


def _dual_terms(G: FrameSystem, Phi: FrameSystem, k: PerturbationConstants):
    check_same_spaces(G, Phi)
    out = G.space_X.dual().p
    return [
        _sphere.Term(1.0, (Phi.matrix - G.matrix).T, out),
        _sphere.Term(-k.lambda1, G.matrix.T, out),
        _sphere.Term(-k.lambda2, Phi.matrix.T, out),
    ]


def _synthesis_terms(F: FrameSystem, Psi: FrameSystem, k: PerturbationConstants):
    check_same_spaces(F, Psi)
    return [
        _sphere.Term(1.0, (Psi.matrix - F.matrix).T, F.p),
        _sphere.Term(-k.lambda1, F.matrix.T, F.p),
        _sphere.Term(-k.lambda2, Psi.matrix.T, F.p),
    ]


def residual_estimate(G: FrameSystem, Phi: FrameSystem, k: PerturbationConstants, seed: int = 0) -> ResidualEstimate:
    """Dual-form residual over unit ``d`` in ``X_d*``."""
    return sup_of_terms(_dual_terms(G, Phi, k), G.space_Xd.dual(), -k.mu, seed)


def synthesis_residual_estimate(
    F: FrameSystem, Psi: FrameSystem, k: PerturbationConstants, seed: int = 0
) -> ResidualEstimate:
    """Synthesis-form residual over unit ``c`` in ``X_d``."""
    return sup_of_terms(_synthesis_terms(F, Psi, k), F.space_Xd, -k.mu, seed)


def worst_case_residual(
    G: FrameSystem, Phi: FrameSystem, k: PerturbationConstants, seed: int = 0, certified: bool = False
) -> float:
    """Supremum of the dual-form residual; the condition holds iff it is ``<= 0``.

    With ``certified`` the rigorous upper bound is returned instead of the
    best value found.
    """
    est = residual_estimate(G, Phi, k, seed)
    return est.upper if certified else est.value


def synthesis_residual(
    F: FrameSystem, Psi: FrameSystem, k: PerturbationConstants, seed: int = 0, certified: bool = False
) -> float:
    est = synthesis_residual_estimate(F, Psi, k, seed)
    return est.upper if certified else est.value


def _check_lambda2(lambda2: float) -> None:
    if lambda2 >= 1.0:
        raise ConstantsError(f"lambda2 must be < 1, got {lambda2}", lambda2=lambda2)


def minimal_mu(
    G: FrameSystem,
    Phi: FrameSystem,
    lambda1: float = 0.0,
    lambda2: float = 0.0,
    seed: int = 0,
    certified: bool = False,
    form: str = "dual",
) -> float:
    """Smallest ``mu >= 0`` for which the residual condition holds.

    ``form`` is ``"dual"`` (functionals) or ``"synthesis"`` (vectors).
    ``certified`` returns a value that is guaranteed to be large enough.
    """
    _check_lambda2(lambda2)
    k = PerturbationConstants(0.0, lambda1, lambda2)
    if form == "dual":
        est = residual_estimate(G, Phi, k, seed)
    elif form == "synthesis":
        est = synthesis_residual_estimate(G, Phi, k, seed)
    else:
        raise ValueError(f"unknown residual form {form!r}")
    return max(est.upper if certified else est.value, 0.0)


# ---------------------------------------------------------------------------
# reports


@dataclass
class TheoremReport:
    theorem_id: str
    hypothesis_holds: bool
    hypothesis_status: str  # holds | boundary | fails
    margins: dict
    delta: float | None
    predicted_lower: float | None
    predicted_upper: float | None
    actual_lower: BoundsEstimate | None
    actual_upper: BoundsEstimate | None
    verdict: str
    constants: PerturbationConstants
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    tolerances: Tolerances = DEFAULT_TOL

    @property
    def verified(self) -> bool:
        return self.verdict == "verified"

    def to_dict(self) -> dict:
        def est(e):
            return None if e is None else e.to_dict()

        return {
            "theorem_id": self.theorem_id,
            "verdict": self.verdict,
            "hypothesis_holds": self.hypothesis_holds,
            "hypothesis_status": self.hypothesis_status,
            "margins": dict(self.margins),
            "delta": self.delta,
            "predicted_lower": self.predicted_lower,
            "predicted_upper": self.predicted_upper,
            "actual_lower": est(self.actual_lower),
            "actual_upper": est(self.actual_upper),
            "constants": self.constants.to_dict(),
            "checks": dict(self.checks),
            "details": _jsonable(self.details),
            "tolerances": self.tolerances.to_dict(),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def _status(margins: dict, tol: Tolerances) -> str:
    """Strict hypotheses: every margin must exceed ``tol.hypothesis``."""
    if not margins:
        return "holds"
    worst = min(margins.values())
    if worst > tol.hypothesis:
        return "holds"
    if worst >= 0.0:
        return "boundary"
    return "fails"


class _Builder:
    """Collects margins and checks, then decides the verdict."""

    def __init__(self, theorem_id: str, k: PerturbationConstants, tol: Tolerances):
        self.theorem_id = theorem_id
        self.k = k
        self.tol = tol
        self.margins: dict = {}
        self.checks: dict = {}
        self.details: dict = {}

    def residual(self, name: str, est: ResidualEstimate) -> None:
        # the condition is "sup <= 0", accepted up to the residual tolerance
        self.margins[name] = self.tol.residual - est.upper
        self.details[name] = est.to_dict()

    def strict(self, name: str, margin: float) -> None:
        self.margins[name] = float(margin)

    def max_delta(self, delta_value: float | None, limit: float | None) -> None:
        if limit is not None and delta_value is not None:
            self.margins["max_delta"] = float(limit - delta_value)
            self.details["max_delta"] = limit

    @property
    def status(self) -> str:
        return _status(self.margins, self.tol)

    def lower_ok(self, name: str, actual: float, predicted: float) -> None:
        self.checks[name] = bool(actual >= predicted - self.tol.bound(predicted))

    def upper_ok(self, name: str, actual: float, predicted: float) -> None:
        self.checks[name] = bool(actual <= predicted + self.tol.bound(predicted))

    def report(self, delta_value, pred_lower, pred_upper, actual_lower, actual_upper) -> TheoremReport:
        status = self.status
        holds = status == "holds"
        if not holds:
            verdict = "hypothesis_fails"
        elif all(self.checks.values()):
            verdict = "verified"
        else:
            verdict = "bound_violated"
        return TheoremReport(
            theorem_id=self.theorem_id,
            hypothesis_holds=holds,
            hypothesis_status=status,
            margins=self.margins,
            delta=delta_value,
            predicted_lower=pred_lower,
            predicted_upper=pred_upper,
            actual_lower=actual_lower,
            actual_upper=actual_upper,
            verdict=verdict,
            constants=self.k,
            checks=self.checks,
            details=self.details,
            tolerances=self.tol,
        )


def _delta_or_none(B: float, k: PerturbationConstants) -> float | None:
    return delta(B, k) if k.lambda2 < 1.0 else None


# ---------------------------------------------------------------------------
# Bessel sequences and frames


def verify_bessel_perturbation(
    G: FrameSystem,
    Phi: FrameSystem,
    k: PerturbationConstants,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
) -> TheoremReport:
    """Bessel bound ``B + Delta`` for ``Phi`` and ``Delta`` for ``Phi - G``."""
    b = _Builder("bessel_3_1", k, tol)
    b.residual("residual", residual_estimate(G, Phi, k, seed))
    b.strict("lambda2_lt_1", 1.0 - k.lambda2)
    B_G = bessel_bound(G, seed=seed)
    B = B_G.certified_high
    d = _delta_or_none(B, k)
    b.max_delta(d, max_delta)
    b.details["B"] = B_G.to_dict()
    if d is None:
        return b.report(None, None, None, None, None)
    actual = bessel_bound(Phi, seed=seed)
    diff = bessel_bound(Phi - G, seed=seed)
    b.upper_ok("upper", actual.certified_high, B + d)
    b.upper_ok("difference_upper", diff.certified_high, d)
    b.details["difference_bound"] = diff.to_dict()
    return b.report(d, None, B + d, None, actual)


def _require_frame(F: FrameSystem, seed: int):
    bounds = frame_bounds(F, seed=seed)
    if bounds.lower.value <= 0.0:
        raise NotAFrameError("the analysis map has a kernel: lower frame bound is 0", status=bounds.status)
    return bounds


def verify_frame_perturbation(
    G: FrameSystem,
    Phi: FrameSystem,
    k: PerturbationConstants,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
) -> TheoremReport:
    """Frame bounds ``[A - Delta, B + Delta]`` for ``Phi``.

    Needs ``mu + l2 (A + B) + l1 B < A`` on top of the dual-form condition.
    """
    bounds = _require_frame(G, seed)
    A, B = bounds.lower.certified_low, bounds.upper.certified_high
    b = _Builder("frame_3_3", k, tol)
    b.residual("residual", residual_estimate(G, Phi, k, seed))
    b.strict("lambda2_lt_1", 1.0 - k.lambda2)
    b.strict("frame_condition", A - k.mu - k.lambda2 * (A + B) - k.lambda1 * B)
    b.details["A"] = bounds.lower.to_dict()
    b.details["B"] = bounds.upper.to_dict()
    d = _delta_or_none(B, k)
    b.max_delta(d, max_delta)
    if d is None:
        return b.report(None, None, None, None, None)
    actual = frame_bounds(Phi, seed=seed)
    b.lower_ok("lower", actual.lower.value, A - d)
    b.upper_ok("upper", actual.upper.certified_high, B + d)
    return b.report(d, A - d, B + d, actual.lower, actual.upper)


# ---------------------------------------------------------------------------
# Banach frames


def banach_frame_lower(s_norm: float, k: PerturbationConstants) -> float:
    """``(1 - (mu ||S|| + l1)) / ((1 + l2) ||S||)``."""
    return (1.0 - (k.mu * s_norm + k.lambda1)) / ((1.0 + k.lambda2) * s_norm)


def _left_inverse(S, G: FrameSystem, tol: float = 1e-10) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.shape != (G.n, G.m):
        raise DimensionError(f"S must have shape {(G.n, G.m)}, got {S.shape}", expected=[G.n, G.m], got=list(S.shape))
    err = float(np.max(np.abs(S @ G.matrix - np.eye(G.n))))
    if err > tol:
        raise PreconditionError(f"S is not a left inverse of the analysis map (max error {err:.3g})", error=err)
    return S


def _reconstruction_witness(S: np.ndarray, Phi: FrameSystem) -> np.ndarray | None:
    """``(S U_Phi)^{-1} S``, a left inverse of the perturbed analysis map."""
    core = S @ Phi.matrix
    if numerical_rank(core) < core.shape[0]:
        return None
    return np.linalg.solve(core, S)


def verify_banach_frame_perturbation(
    G: FrameSystem,
    Phi: FrameSystem,
    k: PerturbationConstants,
    S=None,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
    s_norm: float | None = None,
    theorem_id: str = "banach_frame_3_6",
) -> TheoremReport:
    """Perturbed Banach frame with an explicit reconstruction operator.

    ``S`` defaults to the pseudo-inverse of the analysis matrix.  ``s_norm``
    overrides the computed ``||S||`` (it must be a valid upper bound).
    """
    b = _Builder(theorem_id, k, tol)
    b.details["S_source"] = "pseudo-inverse" if S is None else "given"
    S = np.linalg.pinv(G.matrix) if S is None else _left_inverse(S, G)
    S_est = op_norm(S, G.space_Xd, G.space_X, seed=seed)
    s = S_est.certified_high if s_norm is None else float(s_norm)
    b.details["S_norm"] = S_est.to_dict()
    b.details["S_norm_used"] = s
    b.residual("residual", residual_estimate(G, Phi, k, seed))
    b.strict("lambda2_lt_1", 1.0 - k.lambda2)
    b.strict("lambda1_plus_mu_S_lt_1", 1.0 - (k.lambda1 + k.mu * s))
    B_G = bessel_bound(G, seed=seed)
    B = B_G.certified_high
    b.details["B"] = B_G.to_dict()
    d = _delta_or_none(B, k)
    b.max_delta(d, max_delta)
    if d is None:
        return b.report(None, None, None, None, None)
    pred_lower = banach_frame_lower(s, k)
    actual = frame_bounds(Phi, seed=seed)
    b.lower_ok("lower", actual.lower.value, pred_lower)
    b.upper_ok("upper", actual.upper.certified_high, B + d)
    witness = _reconstruction_witness(S, Phi)
    if witness is None:
        b.checks["reconstruction"] = False
    else:
        err = float(np.max(np.abs(witness @ Phi.matrix - np.eye(G.n))))
        b.checks["reconstruction"] = err <= tol.identity
        b.details["reconstruction_error"] = err
        b.details["S_tilde"] = witness
    return b.report(d, pred_lower, B + d, actual.lower, actual.upper)


def projection_lower(A: float, P_norm: float, k: PerturbationConstants) -> float:
    """``(A / ||P||) (1 - (mu ||P|| / A + l1)) / (1 + l2)``."""
    return (A / P_norm) * (1.0 - (k.mu * P_norm / A + k.lambda1)) / (1.0 + k.lambda2)


def verify_banach_frame_projection(
    G: FrameSystem,
    Phi: FrameSystem,
    k: PerturbationConstants,
    P,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
) -> TheoremReport:
    """Banach frame perturbation with reconstruction built from a projection.

    ``P`` must be a projection of ``X_d`` onto the range of the analysis
    map; the reconstruction operator is ``U^{-1} P``.
    """
    P = np.asarray(P, dtype=float)
    if P.shape != (G.m, G.m):
        raise DimensionError(f"P must have shape {(G.m, G.m)}, got {P.shape}", expected=[G.m, G.m], got=list(P.shape))
    scale = max(1.0, float(np.max(np.abs(P))))
    if np.max(np.abs(P @ P - P)) > 1e-10 * scale:
        raise PreconditionError("P is not idempotent")
    if np.max(np.abs(P @ G.matrix - G.matrix)) > 1e-10 * scale * max(1.0, float(np.max(np.abs(G.matrix)))):
        raise PreconditionError("P does not fix the range of the analysis map")
    if numerical_rank(P) != G.n:
        raise PreconditionError("the range of P is larger than the range of the analysis map")
    bounds = _require_frame(G, seed)
    A = bounds.lower.certified_low
    P_est = op_norm(P, G.space_Xd, G.space_Xd, seed=seed)
    S = np.linalg.pinv(G.matrix) @ P
    S_est = op_norm(S, G.space_Xd, G.space_X, seed=seed)
    p_over_a = P_est.certified_high / A
    s = min(S_est.certified_high, p_over_a)
    rep = verify_banach_frame_perturbation(
        G, Phi, k, S=S, seed=seed, tol=tol, max_delta=max_delta, s_norm=s, theorem_id="banach_frame_proj_3_7"
    )
    rep.details["S_source"] = "U^-1 P"
    rep.details["P_norm"] = P_est.to_dict()
    rep.details["A"] = bounds.lower.to_dict()
    rep.margins["lambda1_plus_mu_P_over_A_lt_1"] = 1.0 - (k.lambda1 + k.mu * p_over_a)
    cor_lower = projection_lower(A, P_est.certified_high, k)
    rep.details["corollary_lower"] = cor_lower
    if rep.actual_lower is not None:
        rep.checks["corollary_lower"] = bool(rep.actual_lower.value >= cor_lower - tol.bound(cor_lower))
    status = _status(rep.margins, tol)
    rep.hypothesis_status, rep.hypothesis_holds = status, status == "holds"
    if not rep.hypothesis_holds:
        rep.verdict = "hypothesis_fails"
    elif not all(rep.checks.values()):
        rep.verdict = "bound_violated"
    return rep


# ---------------------------------------------------------------------------
# Riesz bases


def riesz_lower(A: float, k: PerturbationConstants) -> float:
    """``A - (A (l1 + l2) + mu) / (1 + l2)``."""
    return A - (A * (k.lambda1 + k.lambda2) + k.mu) / (1.0 + k.lambda2)


def verify_riesz_perturbation(
    F: FrameSystem,
    Psi: FrameSystem,
    k: PerturbationConstants,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
) -> TheoremReport:
    """Riesz bounds ``[A - (A(l1+l2)+mu)/(1+l2), B + Delta]`` for ``Psi``."""
    rb = riesz_bounds(F, seed=seed)
    if not rb.is_riesz_basis:
        raise NotARieszBasisError(f"F is not a Riesz basis ({rb.status})", status=rb.status)
    A, B = rb.lower.certified_low, rb.upper.certified_high
    b = _Builder("riesz_3_8", k, tol)
    b.residual("residual", synthesis_residual_estimate(F, Psi, k, seed))
    b.strict("lambda2_lt_1", 1.0 - k.lambda2)
    b.strict("lambda1_plus_mu_over_A_lt_1", 1.0 - (k.lambda1 + k.mu / A))
    b.details["A"] = rb.lower.to_dict()
    b.details["B"] = rb.upper.to_dict()
    d = _delta_or_none(B, k)
    b.max_delta(d, max_delta)
    if d is None:
        return b.report(None, None, None, None, None)
    pred_lower = riesz_lower(A, k)
    b.details["delta_lower"] = A - d
    b.checks["refined_lower_beats_delta"] = bool(pred_lower >= A - d - 1e-12 * max(1.0, A))
    actual = riesz_bounds(Psi, seed=seed)
    b.checks["complete"] = actual.complete
    b.lower_ok("lower", actual.lower.value, pred_lower)
    b.upper_ok("upper", actual.upper.certified_high, B + d)
    return b.report(d, pred_lower, B + d, actual.lower, actual.upper)


# ---------------------------------------------------------------------------
# atomic decompositions


def atomic_bounds(A: float, B: float, k: PerturbationConstants) -> tuple[float, float]:
    """``(A (1-l2) / (1+l1+mu B), B (1+l2) / (1-(l1+mu B)))``."""
    eff = k.lambda1 + k.mu * B
    return A * (1.0 - k.lambda2) / (1.0 + eff), B * (1.0 + k.lambda2) / (1.0 - eff)


def _check_decomposition(G: FrameSystem, F: FrameSystem, tol: float = 1e-10) -> None:
    check_same_spaces(G, F)
    err = float(np.max(np.abs(synthesis_matrix(F) @ G.matrix - np.eye(G.n))))
    if err > tol:
        raise PreconditionError(f"(G, F) does not reconstruct: max error {err:.3g}", error=err)


def _range_restricted_terms(G, F, Psi, k, prefix: int | None = None):
    """Terms of the restricted synthesis residual ``c = U_G f``, optionally truncated."""
    U = G.matrix
    if prefix is not None:
        U = U.copy()
        U[prefix:] = 0.0
    D = (Psi.matrix - F.matrix).T @ U
    terms = [
        _sphere.Term(1.0, D, G.p),
        _sphere.Term(-k.mu, U, G.q),
        _sphere.Term(-k.lambda2, Psi.matrix.T @ U, G.p),
    ]
    if prefix is None:
        # sum g_i(f) f_i = f, so the l1 term is l1 ||f|| = l1 on the unit sphere
        return terms, -k.lambda1
    terms.append(_sphere.Term(-k.lambda1, F.matrix.T @ U, G.p))
    return terms, 0.0


def atomic_residual_estimate(G, F, Psi, k, seed: int = 0, prefix: int | None = None) -> ResidualEstimate:
    """Synthesis-form residual restricted to coefficients ``{g_i(f)}``."""
    terms, offset = _range_restricted_terms(G, F, Psi, k, prefix)
    return sup_of_terms(terms, G.space_X, offset, seed)


def verify_atomic_decomposition_perturbation(
    G: FrameSystem,
    F: FrameSystem,
    Psi: FrameSystem,
    k: PerturbationConstants,
    mode: str = "full_A9",
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
    samples: int = 100,
) -> TheoremReport:
    """New dual family ``theta`` for the perturbed atoms ``Psi``.

    ``theta_i = g_i o Gop^{-1}`` with ``Gop f = sum g_i(f) psi_i``; the
    report checks ``f = sum theta_i(f) psi_i`` and the bounds of ``theta``.
    """
    if mode not in ("full_A9", "truncated_A10"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_decomposition(G, F)
    check_same_spaces(F, Psi)
    bounds = _require_frame(G, seed)
    A, B = bounds.lower.certified_low, bounds.upper.certified_high
    theorem_id = "atomic_3_9" if mode == "full_A9" else "atomic_3_10"
    b = _Builder(theorem_id, k, tol)
    b.details["A"] = bounds.lower.to_dict()
    b.details["B"] = bounds.upper.to_dict()
    if mode == "full_A9":
        b.residual("residual", atomic_residual_estimate(G, F, Psi, k, seed))
    else:
        prefix_res = [atomic_residual_estimate(G, F, Psi, k, seed, prefix=n) for n in range(1, G.m + 1)]
        worst = max(prefix_res, key=lambda r: r.upper)
        b.residual("residual", worst)
        b.details["prefix_residuals"] = [r.upper for r in prefix_res]
    b.strict("lambda2_lt_1", 1.0 - k.lambda2)
    b.strict("lambda1_plus_mu_B_lt_1", 1.0 - (k.lambda1 + k.mu * B))
    d = _delta_or_none(B, k)
    b.max_delta(d, max_delta)
    if b.status != "holds":
        return b.report(d, None, None, None, None)
    pred_lower, pred_upper = atomic_bounds(A, B, k)
    Gop = synthesis_matrix(Psi) @ G.matrix
    cert = check_neumann_invertibility(Gop, G.space_X, seed=seed)
    b.details["invertibility"] = None if cert is None else cert.to_dict()
    b.checks["invertible"] = cert is not None or numerical_rank(Gop) == G.n
    if numerical_rank(Gop) < G.n:
        b.checks["invertible"] = False
        return b.report(d, pred_lower, pred_upper, None, None)
    Theta = G.like(np.linalg.solve(Gop.T, G.matrix.T).T)
    b.details["Theta"] = Theta.matrix
    rng = np.random.default_rng(seed)
    fs = rng.standard_normal((samples, G.n))
    recon = fs @ (synthesis_matrix(Psi) @ Theta.matrix).T
    rel = pnorm(fs - recon, G.p) / pnorm(fs, G.p)
    b.details["reconstruction_error"] = float(rel.max())
    b.checks["reconstruction"] = bool(rel.max() <= tol.identity)
    if mode == "truncated_A10":
        # partial reconstructions sum_{i<=n} theta_i(f) psi_i for n = 1..m
        tails = []
        for n in range(1, G.m + 1):
            part = fs @ (Psi.matrix[:n].T @ Theta.matrix[:n]).T
            tails.append(float((pnorm(fs - part, G.p) / pnorm(fs, G.p)).max()))
        b.details["partial_sum_errors"] = tails
        b.checks["partial_sums_converge"] = bool(tails[-1] <= tol.identity)
    actual = frame_bounds(Theta, seed=seed)
    b.lower_ok("lower", actual.lower.value, pred_lower)
    b.upper_ok("upper", actual.upper.certified_high, pred_upper)
    return b.report(d, pred_lower, pred_upper, actual.lower, actual.upper)


# ---------------------------------------------------------------------------
# perturbation of the reconstruction operator


def operator_residual_estimate(S, S_tilde, source: SpaceSpec, target: SpaceSpec, k: PerturbationConstants, seed=0):
    """``sup_{||c||=1} ||Sc - S~c|| - nu - b1 ||Sc|| - b2 ||S~c||`` over ``X_d``."""
    terms = [
        _sphere.Term(1.0, S - S_tilde, target.p),
        _sphere.Term(-k.lambda1, S, target.p),
        _sphere.Term(-k.lambda2, S_tilde, target.p),
    ]
    return sup_of_terms(terms, source, -k.mu, seed)


def verify_operator_perturbation_cc(
    G: FrameSystem,
    S,
    S_tilde,
    k: PerturbationConstants,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
) -> TheoremReport:
    """Perturbing the reconstruction operator ``S`` of a Banach frame.

    ``k`` holds ``(nu, beta1, beta2)`` in the ``mu, lambda1, lambda2`` slots.
    The new family is ``Theta = U_G (S~ U_G)^{-1}``, so ``S~ Theta = I``.
    """
    S = _left_inverse(S, G)
    S_tilde = np.asarray(S_tilde, dtype=float)
    if S_tilde.shape != S.shape:
        raise DimensionError(f"S_tilde must have shape {S.shape}", expected=list(S.shape), got=list(S_tilde.shape))
    bounds = _require_frame(G, seed)
    A, B = bounds.lower.certified_low, bounds.upper.certified_high
    b = _Builder("operator_pert_cc", k, tol)
    b.details["A"] = bounds.lower.to_dict()
    b.details["B"] = bounds.upper.to_dict()
    b.residual("residual", operator_residual_estimate(S, S_tilde, G.space_Xd, G.space_X, k, seed))
    b.strict("beta2_lt_1", 1.0 - k.lambda2)
    b.strict("beta1_plus_nu_B_lt_1", 1.0 - (k.lambda1 + k.mu * B))
    d = _delta_or_none(B, k)
    b.max_delta(d, max_delta)
    if b.status != "holds":
        return b.report(d, None, None, None, None)
    pred_lower, pred_upper = atomic_bounds(A, B, k)
    Gop = S_tilde @ G.matrix
    if numerical_rank(Gop) < G.n:
        b.checks["invertible"] = False
        return b.report(d, pred_lower, pred_upper, None, None)
    Theta = G.like(np.linalg.solve(Gop.T, G.matrix.T).T)
    err = float(np.max(np.abs(S_tilde @ Theta.matrix - np.eye(G.n))))
    b.details["Theta"] = Theta.matrix
    b.details["reconstruction_error"] = err
    b.checks["reconstruction"] = err <= tol.identity
    actual = frame_bounds(Theta, seed=seed)
    b.lower_ok("lower", actual.lower.value, pred_lower)
    b.upper_ok("upper", actual.upper.certified_high, pred_upper)
    return b.report(d, pred_lower, pred_upper, actual.lower, actual.upper)


# ---------------------------------------------------------------------------
# Hilbert spaces


def hilbert_bounds_1_1(A: float, B: float, k: PerturbationConstants) -> tuple[float, float]:
    """Squared frame bounds of a perturbed Hilbert frame.

    ``A, B`` are the usual (squared-norm) frame bounds.  Requires
    ``max(l1 + mu / sqrt(A), l2) < 1``.
    """
    if A <= 0 or B <= 0:
        raise ValueError("A and B must be positive")
    if not max(k.lambda1 + k.mu / math.sqrt(A), k.lambda2) < 1.0:
        raise ConstantsError(
            "hypothesis max(lambda1 + mu/sqrt(A), lambda2) < 1 fails",
            lambda1=k.lambda1,
            lambda2=k.lambda2,
            mu=k.mu,
        )
    lo = A * (1.0 - (k.lambda1 + k.lambda2 + k.mu / math.sqrt(A)) / (1.0 + k.lambda2)) ** 2
    hi = B * (1.0 + (k.lambda1 + k.lambda2 + k.mu / math.sqrt(B)) / (1.0 - k.lambda2)) ** 2
    return lo, hi


def verify_hilbert_perturbation(
    G: FrameSystem,
    Phi: FrameSystem,
    k: PerturbationConstants,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    max_delta: float | None = None,
) -> TheoremReport:
    """The ``p = q = 2`` case, reported in squared-bound convention."""
    if G.p != 2.0 or G.q != 2.0:
        raise PreconditionError("the Hilbert-space result needs p = q = 2", p=G.p, q=G.q)
    bounds = _require_frame(G, seed)
    A, B = bounds.lower.value**2, bounds.upper.value**2
    b = _Builder("hilbert_1_1", k, tol)
    b.residual("residual", residual_estimate(G, Phi, k, seed))
    b.strict("lambda2_lt_1", 1.0 - k.lambda2)
    b.strict("lambda1_plus_mu_over_sqrtA_lt_1", 1.0 - (k.lambda1 + k.mu / math.sqrt(A)))
    d = _delta_or_none(math.sqrt(B), k)
    b.max_delta(d, max_delta)
    if b.status != "holds":
        return b.report(d, None, None, None, None)
    lo, hi = hilbert_bounds_1_1(A, B, k)
    actual = frame_bounds(Phi, seed=seed)
    sq_lo = BoundsEstimate(actual.lower.value**2, "lower_A", actual.lower.certified_low**2, actual.lower.certified_high**2)
    sq_hi = BoundsEstimate(actual.upper.value**2, "upper_B", actual.upper.certified_low**2, actual.upper.certified_high**2)
    b.lower_ok("lower", sq_lo.value, lo)
    b.upper_ok("upper", sq_hi.certified_high, hi)
    return b.report(d, lo, hi, sq_lo, sq_hi)


__all__ = [
    "DEFAULT_TOL",
    "PerturbationConstants",
    "ResidualEstimate",
    "THEOREM_IDS",
    "TheoremReport",
    "Tolerances",
    "VERDICTS",
    "ZERO",
    "atomic_bounds",
    "atomic_residual_estimate",
    "banach_frame_lower",
    "delta",
    "hilbert_bounds_1_1",
    "minimal_mu",
    "operator_residual_estimate",
    "projection_lower",
    "residual_estimate",
    "riesz_lower",
    "sup_of_terms",
    "synthesis_residual",
    "synthesis_residual_estimate",
    "verify_atomic_decomposition_perturbation",
    "verify_banach_frame_perturbation",
    "verify_banach_frame_projection",
    "verify_bessel_perturbation",
    "verify_frame_perturbation",
    "verify_hilbert_perturbation",
    "verify_operator_perturbation_cc",
    "verify_riesz_perturbation",
    "worst_case_residual",
]
