"""Analysis/synthesis operators and their p -> q bounds.

A :class:`FrameSystem` stores a family of functionals as the rows of an
``m x n`` matrix: row ``i`` is ``g_i`` acting on ``X = l^p_n`` and the
analysis map ``f -> {g_i(f)}`` lands in ``X_d = l^q_m``.  The synthesis map
``d -> sum d_i g_i`` is the transpose, acting from ``X_d* = l^{q*}_m`` into
``X* = l^{p*}_n``.  The same container holds families of vectors
``{f_i} in X`` (Riesz bases, atoms); then the synthesis map
``c -> sum c_i f_i`` is the transpose acting from ``X_d`` into ``X``.

Operator norms are computed exactly where a closed form exists and by
multi-start projected gradient ascent otherwise.  Every result is a
:class:`BoundsEstimate` whose ``[certified_low, certified_high]`` bracket
contains the true value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _sphere
from .errors import DimensionError, NonFiniteError
from .spaces import INF, SpaceSpec, dual_exponent, pnorm, sign_vectors

ENUM_MAX_DIM = 8
RANK_RTOL = 1e-12


def as_matrix(M, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Validate a real matrix (finite entries, optional shape)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}", name=name)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} has NaN or Inf entries", name=name)
    if rows is not None and M.shape[0] != rows or cols is not None and M.shape[1] != cols:
        raise DimensionError(
            f"{name} has shape {M.shape}, expected ({rows}, {cols})",
            name=name,
            expected=[rows, cols],
            got=list(M.shape),
        )
    return M


@dataclass(frozen=True)
class FrameSystem:
    """Family of ``m`` elements of an ``n``-dimensional space, one per row."""

    matrix: np.ndarray
    space_X: SpaceSpec
    space_Xd: SpaceSpec

    def __post_init__(self):
        M = as_matrix(self.matrix, self.space_Xd.dim, self.space_X.dim)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def from_matrix(cls, matrix, p=2.0, q=2.0) -> "FrameSystem":
        M = as_matrix(matrix)
        m, n = M.shape
        return cls(M, SpaceSpec(n, p), SpaceSpec(m, q))

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def p(self) -> float:
        return self.space_X.p

    @property
    def q(self) -> float:
        return self.space_Xd.p

    def like(self, matrix) -> "FrameSystem":
        """Same spaces, different elements."""
        return FrameSystem(np.asarray(matrix, dtype=float), self.space_X, self.space_Xd)

    def __sub__(self, other: "FrameSystem") -> "FrameSystem":
        check_same_spaces(self, other)
        return self.like(self.matrix - other.matrix)

    def __add__(self, other: "FrameSystem") -> "FrameSystem":
        check_same_spaces(self, other)
        return self.like(self.matrix + other.matrix)

    def scaled(self, c: float) -> "FrameSystem":
        return self.like(c * self.matrix)

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "X": self.space_X.to_dict(),
            "Xd": self.space_Xd.to_dict(),
        }


def check_same_spaces(a: FrameSystem, b: FrameSystem) -> None:
    if a.space_X != b.space_X or a.space_Xd != b.space_Xd:
        raise DimensionError(
            "frame systems live in different spaces",
            left={"X": a.space_X.to_dict(), "Xd": a.space_Xd.to_dict()},
            right={"X": b.space_X.to_dict(), "Xd": b.space_Xd.to_dict()},
        )


@dataclass
class BoundsEstimate:
    """A computed bound together with a bracket containing the true value.

    For ``upper_B`` the value is the best point found (a lower estimate of
    the supremum); for ``lower_A`` it over-estimates the infimum.  Theorem
    checks use ``certified_high`` for upper bounds.
    """

    value: float
    kind: str
    certified_low: float
    certified_high: float
    evaluations: int = 0
    method: str = ""

    def __post_init__(self):
        if self.kind not in ("upper_B", "lower_A"):
            raise ValueError(f"unknown bound kind {self.kind!r}")
        self.value = float(self.value)
        self.certified_low = float(min(self.certified_low, self.value))
        self.certified_high = float(max(self.certified_high, self.value))
        if self.kind == "lower_A":
            self.certified_low = max(self.certified_low, 0.0)

    @property
    def exact(self) -> bool:
        return self.certified_low == self.certified_high

    @property
    def gap(self) -> float:
        return self.certified_high - self.certified_low

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind,
            "certified_low": self.certified_low,
            "certified_high": self.certified_high,
            "evaluations": int(self.evaluations),
            "method": self.method,
        }


def _exact(value: float, kind: str, method: str) -> BoundsEstimate:
    return BoundsEstimate(value, kind, value, value, 0, method)


# ---------------------------------------------------------------------------
# closed forms and cheap over-bounds


def norm_from_l1(M: np.ndarray, q: float) -> float:
    """``||M||_{1->q}``: the largest column norm."""
    return float(pnorm(M.T, q).max())


def norm_to_linf(M: np.ndarray, p: float) -> float:
    """``||M||_{p->inf}``: the largest row norm in the dual exponent."""
    return float(pnorm(M, dual_exponent(p)).max())


def spectral_norm(M: np.ndarray) -> float:
    return float(np.linalg.svd(M, compute_uv=False)[0])


def exact_op_norm(M: np.ndarray, p: float, q: float) -> tuple[float, str] | None:
    """``(||M||_{p->q}, method)`` when a closed form applies, else ``None``."""
    m, n = M.shape
    if p == 1.0:
        return norm_from_l1(M, q), "closed-form:max-column"
    if math.isinf(q):
        return norm_to_linf(M, p), "closed-form:max-row"
    if p == 2.0 and q == 2.0:
        return spectral_norm(M), "closed-form:sigma-max"
    if math.isinf(p) and n <= ENUM_MAX_DIM:
        signs = sign_vectors(n, half=True)
        return float(pnorm(signs @ M.T, q).max()), "vertex-enumeration:linf-ball"
    if q == 1.0 and m <= ENUM_MAX_DIM:
        # ||M||_{p->1} = ||M^T||_{inf->p*}
        signs = sign_vectors(m, half=True)
        return float(pnorm(signs @ M, dual_exponent(p)).max()), "vertex-enumeration:dual-linf-ball"
    return None


def _nesting_factor(dim: int, a: float, b: float) -> float:
    """Smallest c with ``||x||_b <= c ||x||_a`` on R^dim."""
    inv_a = 0.0 if math.isinf(a) else 1.0 / a
    inv_b = 0.0 if math.isinf(b) else 1.0 / b
    return float(dim ** max(0.0, inv_b - inv_a))


def analytic_upper(M: np.ndarray, p: float, q: float) -> float:
    """Cheap certified over-bound of ``||M||_{p->q}``.

    Minimum of norm-nesting relaxations to the closed-form cases and of
    Riesz-Thorin interpolation between them.  Interpolation is valid for
    real matrices because the real and complex norms agree at every
    endpoint used.
    """
    m, n = M.shape
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    sigma = spectral_norm(M)
    cands = [
        _nesting_factor(n, p, 1.0) * norm_from_l1(M, q),
        _nesting_factor(m, INF, q) * norm_to_linf(M, p),
        _nesting_factor(n, p, 2.0) * _nesting_factor(m, 2.0, q) * sigma,
    ]

    def endpoint(a: float, b: float) -> float | None:
        # closed form at (1/p, 1/q) = (a, b)?
        if a >= 1.0 - 1e-15:
            return norm_from_l1(M, INF if b <= 0 else 1.0 / b)
        if b <= 1e-15:
            return norm_to_linf(M, INF if a <= 0 else 1.0 / a)
        return None

    if inv_q <= inv_p:
        for theta in np.linspace(1.0 - inv_p, 1.0 - inv_q, 9):
            if theta <= 0.0 or theta >= 1.0:
                continue
            a2 = (inv_p - 1.0 + theta) / theta
            b1 = inv_q / (1.0 - theta)
            if 0.0 <= a2 <= 1.0 and 0.0 <= b1 <= 1.0:
                n1, n2 = endpoint(1.0, b1), endpoint(a2, 0.0)
                cands.append(n1 ** (1.0 - theta) * n2**theta)
    d = np.array([inv_p - 0.5, inv_q - 0.5])
    if np.any(d != 0):
        steps = []
        if d[0] > 0:
            steps.append(0.5 / d[0])
        if d[1] < 0:
            steps.append(0.5 / -d[1])
        for s in steps:
            a, b = 0.5 + s * d[0], 0.5 + s * d[1]
            if s >= 1.0 and -1e-12 <= a <= 1 + 1e-12 and -1e-12 <= b <= 1 + 1e-12:
                e = endpoint(min(a, 1.0), max(b, 0.0))
                if e is not None:
                    th = 1.0 / s
                    cands.append(sigma ** (1.0 - th) * e**th)
    return float(min(cands))


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank from column-pivoted QR with threshold ``rtol * |R_00|``."""
    if not np.any(M):
        return 0
    R = scipy.linalg.qr(M, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    return int(np.sum(diag > rtol * diag[0]))


# ---------------------------------------------------------------------------
# p -> q operator norms


def _check_op(M, from_: SpaceSpec, to: SpaceSpec) -> np.ndarray:
    return as_matrix(M, to.dim, from_.dim)


def op_norm(M, from_: SpaceSpec, to: SpaceSpec, seed: int = 0) -> BoundsEstimate:
    """``sup ||Mv||_to`` over the unit sphere of ``from_``."""
    M = _check_op(M, from_, to)
    p, q = from_.p, to.p
    if not np.any(M):
        return _exact(0.0, "upper_B", "zero-matrix")
    closed = exact_op_norm(M, p, q)
    if closed is not None:
        return _exact(closed[0], "upper_B", closed[1])
    obj = _sphere.SphereObjective([_sphere.Term(1.0, M, q)], p)
    res = _sphere.sup_on_sphere(obj, seed=seed)
    high = analytic_upper(M, p, q)
    method = "multistart-pga+analytic"
    if res.upper is not None and res.upper < high:
        high, method = res.upper, res.method
    return BoundsEstimate(res.value, "upper_B", res.value, high, res.evaluations, method)


def lower_bound(M, from_: SpaceSpec, to: SpaceSpec, seed: int = 0) -> BoundsEstimate:
    """``inf ||Mv||_to`` over the unit sphere of ``from_``.

    A kernel is detected algebraically first, so ``0`` is never the result
    of an optimizer failure.
    """
    M = _check_op(M, from_, to)
    m, n = M.shape
    p, q = from_.p, to.p
    if numerical_rank(M) < n:
        return _exact(0.0, "lower_A", "rank-deficient")
    if p == 2.0 and q == 2.0:
        return _exact(float(np.linalg.svd(M, compute_uv=False)[-1]), "lower_A", "closed-form:sigma-min")
    if m == n:
        inv = np.linalg.solve(M, np.eye(n))
        closed = exact_op_norm(inv, q, p)
        if closed is not None:
            return _exact(1.0 / closed[0], "lower_A", "inverse-" + closed[1])
    obj = _sphere.SphereObjective([_sphere.Term(-1.0, M, q)], p)
    res = _sphere.sup_on_sphere(obj, seed=seed)
    value = -res.value
    # any left inverse L gives ||x|| <= ||L|| ||Mx||
    low = 1.0 / analytic_upper(np.linalg.pinv(M), q, p)
    method = "multistart-pga+pinv"
    if res.upper is not None and -res.upper > low:
        low, method = -res.upper, res.method
    return BoundsEstimate(value, "lower_A", low, value, res.evaluations, method)


# ---------------------------------------------------------------------------
# frame-level wrappers


def bessel_bound(F: FrameSystem, seed: int = 0) -> BoundsEstimate:
    """Upper bound of the analysis map ``X -> X_d``."""
    return op_norm(F.matrix, F.space_X, F.space_Xd, seed=seed)


@dataclass
class FrameBounds:
    lower: BoundsEstimate
    upper: BoundsEstimate

    def __iter__(self):
        return iter((self.lower, self.upper))

    @property
    def is_frame(self) -> bool:
        return self.lower.value > 0

    @property
    def status(self) -> str:
        return "frame" if self.is_frame else "not a frame"


@dataclass
class RieszBounds(FrameBounds):
    complete: bool = True

    @property
    def is_riesz_basis(self) -> bool:
        return self.complete and self.lower.value > 0

    @property
    def status(self) -> str:
        if not self.complete:
            return "not complete"
        return "riesz basis" if self.lower.value > 0 else "not a riesz basis"


def frame_bounds(F: FrameSystem, seed: int = 0) -> FrameBounds:
    """``(A, B)`` of the analysis map; ``A = 0`` means not a frame."""
    return FrameBounds(
        lower_bound(F.matrix, F.space_X, F.space_Xd, seed=seed),
        op_norm(F.matrix, F.space_X, F.space_Xd, seed=seed),
    )


def synthesis_matrix(F: FrameSystem) -> np.ndarray:
    """``c -> sum c_i f_i`` as an ``n x m`` matrix."""
    return F.matrix.T


def riesz_bounds(F: FrameSystem, seed: int = 0) -> RieszBounds:
    """Bounds of the synthesis map ``X_d -> X`` of the vectors in ``F``."""
    T = synthesis_matrix(F)
    complete = numerical_rank(T) == F.n
    return RieszBounds(
        lower_bound(T, F.space_Xd, F.space_X, seed=seed),
        op_norm(T, F.space_Xd, F.space_X, seed=seed),
        complete=complete,
    )


def dual_synthesis_bounds(F: FrameSystem, seed: int = 0) -> FrameBounds:
    """Frame bounds of ``g -> {g(f_i)}`` from ``X*`` into ``X_d*``."""
    return FrameBounds(
        lower_bound(F.matrix, F.space_X.dual(), F.space_Xd.dual(), seed=seed),
        op_norm(F.matrix, F.space_X.dual(), F.space_Xd.dual(), seed=seed),
    )


# ---------------------------------------------------------------------------
# invertibility


def inverse_bracket(lambda1: float, lambda2: float) -> tuple[float, float]:
    return (1.0 - lambda2) / (1.0 + lambda1), (1.0 + lambda2) / (1.0 - lambda1)


@dataclass
class InvertibilityCertificate:
    """``(1-l2)/(1+l1) ||x|| <= ||G^{-1} x|| <= (1+l2)/(1-l1) ||x||``."""

    lambda1: float
    lambda2: float
    inverse_lower: float = field(init=False)
    inverse_upper: float = field(init=False)
    candidates: list = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.lambda1 < 1.0 and 0.0 <= self.lambda2 < 1.0):
            raise ValueError("certificate constants must lie in [0, 1)")
        self.inverse_lower, self.inverse_upper = inverse_bracket(self.lambda1, self.lambda2)

    @property
    def tightest_bracket(self) -> tuple[float, float]:
        """Intersection of the brackets of every certifying candidate pair."""
        lo, hi = self.inverse_lower, self.inverse_upper
        for l1, l2 in self.candidates:
            if l1 < 1.0 and l2 < 1.0:
                a, b = inverse_bracket(l1, l2)
                lo, hi = max(lo, a), min(hi, b)
        return lo, hi

    def contains(self, ratio: float, tol: float = 0.0) -> bool:
        return self.inverse_lower - tol <= ratio <= self.inverse_upper + tol

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "inverse_lower": self.inverse_lower,
            "inverse_upper": self.inverse_upper,
            "candidates": [list(c) for c in self.candidates],
        }


LAMBDA2_GRID = tuple(round(0.1 * k, 1) for k in range(10))


def neumann_lambda1(G: np.ndarray, s: SpaceSpec, lambda2: float, seed: int = 0) -> float:
    """Certified ``sup_{||x||=1} (||Gx - x|| - lambda2 ||Gx||)``, clamped at 0."""
    D = G - np.eye(G.shape[0])
    if lambda2 == 0.0:
        return max(op_norm(D, s, s, seed=seed).certified_high, 0.0)
    obj = _sphere.SphereObjective([_sphere.Term(1.0, D, s.p), _sphere.Term(-lambda2, G, s.p)], s.p)
    res = _sphere.sup_on_sphere(obj, seed=seed)
    if res.upper is not None:
        return max(res.upper, 0.0)
    fallback = op_norm(D, s, s, seed=seed).certified_high - lambda2 * lower_bound(G, s, s, seed=seed).certified_low
    return max(fallback, 0.0)


def check_neumann_invertibility(G, s: SpaceSpec, seed: int = 0) -> InvertibilityCertificate | None:
    """Look for ``l1, l2 < 1`` with ``||Gx - x|| <= l1 ||x|| + l2 ||Gx||``.

    The plain pair ``(||G - I||, 0)`` is tried first and becomes the
    certificate when it works; otherwise the pair minimizing
    ``max(l1, l2)`` over ``l2 in {0, 0.1, ..., 0.9}`` is used.  All pairs
    are kept in ``candidates``.
    """
    G = as_matrix(G, name="G")
    if G.shape[0] != G.shape[1]:
        raise DimensionError(f"G must be square, got shape {G.shape}", got=list(G.shape))
    if G.shape[0] != s.dim:
        raise DimensionError(f"G is {G.shape[0]}x{G.shape[0]} but the space has dim {s.dim}")
    candidates = [(neumann_lambda1(G, s, l2, seed=seed), l2) for l2 in LAMBDA2_GRID]
    plain = candidates[0]
    if plain[0] < 1.0:
        chosen = plain
    else:
        chosen = min(candidates, key=lambda c: (max(c), c[1]))
        if max(chosen) >= 1.0:
            return None
    return InvertibilityCertificate(chosen[0], chosen[1], candidates=candidates)


__all__ = [
    "BoundsEstimate",
    "FrameBounds",
    "FrameSystem",
    "InvertibilityCertificate",
    "RieszBounds",
    "analytic_upper",
    "bessel_bound",
    "check_neumann_invertibility",
    "check_same_spaces",
    "dual_synthesis_bounds",
    "exact_op_norm",
    "frame_bounds",
    "inverse_bracket",
    "lower_bound",
    "numerical_rank",
    "op_norm",
    "riesz_bounds",
    "synthesis_matrix",
]
