"""Finite-dimensional l^p sequence spaces.

A :class:`SpaceSpec` is just a dimension and an exponent.  ``p = inf`` is
always the IEEE infinity (``math.inf``) and every code path branches on it
explicitly, so no power sum is ever formed with a huge exponent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ExponentError, NonFiniteError

INF = math.inf


def parse_exponent(p) -> float:
    """Coerce ``p`` (number, ``"inf"``, ``"∞"``) to a validated exponent."""
    if isinstance(p, str):
        token = p.strip().lower()
        if token in ("inf", "infinity", "∞", "+inf"):
            return INF
        try:
            p = float(token)
        except ValueError:
            raise ExponentError(f"cannot parse exponent {p!r}", exponent=p) from None
    if isinstance(p, bool):
        raise ExponentError("exponent must be a number", exponent=p)
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ExponentError(f"exponent must lie in [1, inf], got {p}", exponent=p)
    return p


def dual_exponent(p) -> float:
    """Conjugate exponent: ``1/p + 1/p* = 1``."""
    p = parse_exponent(p)
    if p == 1.0:
        return INF
    if math.isinf(p):
        return 1.0
    if p == 2.0:
        return 2.0
    return p / (p - 1.0)


def format_exponent(p: float):
    """JSON-friendly exponent: ``"inf"`` for infinity, a float otherwise."""
    return "inf" if math.isinf(p) else float(p)


@dataclass(frozen=True)
class SpaceSpec:
    """Real l^p space of dimension ``dim``."""

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 1:
            raise DimensionError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", parse_exponent(self.p))

    @property
    def is_reflexive_cb(self) -> bool:
        # 1 < p < inf: reflexive with the canonical vectors as a Schauder basis
        return 1.0 < self.p < INF

    def dual(self) -> "SpaceSpec":
        return SpaceSpec(self.dim, dual_exponent(self.p))

    def with_dim(self, dim: int) -> "SpaceSpec":
        return SpaceSpec(dim, self.p)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "p": format_exponent(self.p)}

    def __repr__(self):
        return f"SpaceSpec(dim={self.dim}, p={format_exponent(self.p)})"


def pnorm(a, p: float, axis: int = -1) -> np.ndarray:
    """Batched l^p norm along ``axis`` with max-factoring.

    ``(max|a_i|) * (sum (|a_i|/max)^p)^(1/p)`` keeps large exponents from
    overflowing; rows that are identically zero return 0.
    """
    a = np.abs(np.asarray(a, dtype=float))
    if math.isinf(p):
        return a.max(axis=axis)
    if p == 1.0:
        return a.sum(axis=axis)
    peak = a.max(axis=axis, keepdims=True)
    ratio = a / np.where(peak > 0, peak, 1.0)
    peak = peak.squeeze(axis)
    if p == 2.0:
        return peak * np.sqrt((ratio * ratio).sum(axis=axis))
    return peak * (ratio**p).sum(axis=axis) ** (1.0 / p)


def as_vector(v, s: SpaceSpec) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != s.dim:
        raise DimensionError(
            f"vector of shape {v.shape} does not live in a space of dim {s.dim}",
            expected=s.dim,
            got=list(v.shape),
        )
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("vector has NaN or Inf entries")
    return v


def norm(v, s: SpaceSpec) -> float:
    """Norm of ``v`` in the space ``s``."""
    return float(pnorm(as_vector(v, s), s.p))


def normalize(x: np.ndarray, p: float) -> np.ndarray:
    """Scale the rows of ``x`` onto the unit l^p sphere (zero rows untouched)."""
    x = np.asarray(x, dtype=float)
    n = pnorm(x, p)
    n = np.where(n > 0, n, 1.0)
    return x / (n[..., None] if x.ndim > 1 else n)


def sign_vectors(dim: int, half: bool = False) -> np.ndarray:
    """All vectors in {-1, 1}^dim; with ``half`` only those with first entry +1."""
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=dim)))
    if half:
        signs = signs[signs[:, 0] > 0]
    return signs


def extreme_points(s: SpaceSpec, half: bool = False) -> np.ndarray:
    """Normalized extreme points of the l^1 ball (±e_i) and l^inf ball (sign vectors)."""
    eye = np.eye(s.dim)
    canon = eye if half else np.vstack([eye, -eye])
    corners = sign_vectors(s.dim, half=half)
    return normalize(np.vstack([canon, corners]), s.p)


def sample_unit_sphere(s: SpaceSpec, count: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic points on the unit sphere of ``s``.

    The list starts with ±e_i, then (for dim <= 4) one normalized sign vector
    per orthant, then Gaussian directions rescaled to unit norm.  At most
    ``count`` vectors are returned; the same seed gives the same list.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    return list(_sphere_array(s, count, seed))


def _sphere_array(s: SpaceSpec, count: int, seed: int = 0) -> np.ndarray:
    eye = np.eye(s.dim)
    structured = [eye, -eye]
    if s.dim <= 4:
        structured.append(sign_vectors(s.dim))
    fixed = normalize(np.vstack(structured), s.p)
    if count <= fixed.shape[0]:
        return fixed[:count]
    rng = np.random.default_rng(seed)
    extra = rng.standard_normal((count - fixed.shape[0], s.dim))
    # a Gaussian row is zero with probability 0, but guard anyway
    extra[np.all(extra == 0, axis=1), 0] = 1.0
    return np.vstack([fixed, normalize(extra, s.p)])
