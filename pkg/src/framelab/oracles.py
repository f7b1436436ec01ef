"""Brute-force reference values on deterministic sphere grids (dim <= 4).

The grid is built from generalized spherical coordinates with a common
angular step ``pi / resolution`` (polar angles on ``[0, pi]``, the last angle
on ``[0, 2 pi)``), renormalized to the unit sphere of the source norm, plus
all extreme points of the l^1 and l^inf balls.  Doubling the resolution
yields a superset of points, so the grid maximum never decreases.

Each oracle returns the grid extremum and a bound on how far the true
extremum can be from it: Lipschitz constant times the covering radius of
the grid, measured in the source norm.
"""

from __future__ import annotations

import math
from typing import Iterator, NamedTuple

import numpy as np

from . import _sphere
from .errors import OracleLimitError
from .operators import FrameSystem, _nesting_factor, analytic_upper, as_matrix, check_same_spaces
from .spaces import SpaceSpec, extreme_points, pnorm

MAX_DIM = 4
DEFAULT_RESOLUTION = 720
CHUNK = 200_000


class OracleResult(NamedTuple):
    value: float
    gap: float
    points: int


def _euclidean_chunks(dim: int, resolution: int) -> Iterator[np.ndarray]:
    delta = math.pi / resolution
    azimuth = np.arange(2 * resolution) * delta
    if dim == 1:
        yield np.array([[1.0], [-1.0]])
        return
    polar = np.arange(resolution + 1) * delta
    n_polar = dim - 2
    n_az = azimuth.size
    rows_per_outer = n_az * (resolution + 1) ** max(n_polar - 1, 0)
    outer = polar if n_polar >= 1 else np.array([0.0])
    step = max(1, CHUNK // max(rows_per_outer, 1))
    for start in range(0, outer.size, step):
        block = outer[start : start + step]
        axes = ([block] if n_polar >= 1 else []) + [polar] * max(n_polar - 1, 0) + [azimuth]
        mesh = np.meshgrid(*axes, indexing="ij")
        angles = np.stack([a.ravel() for a in mesh], axis=1)
        yield _from_angles(angles)


def _from_angles(angles: np.ndarray) -> np.ndarray:
    k, a = angles.shape
    x = np.empty((k, a + 1))
    sin_prod = np.ones(k)
    for j in range(a):
        x[:, j] = sin_prod * np.cos(angles[:, j])
        sin_prod = sin_prod * np.sin(angles[:, j])
    x[:, a] = sin_prod
    return x


def covering_radius(space: SpaceSpec, resolution: int) -> float:
    """Distance (in the norm of ``space``) from any unit vector to the grid."""
    dim = space.dim
    if dim == 1:
        return 0.0
    euclid = (dim - 1) * (math.pi / resolution) / 2.0
    up = _nesting_factor(dim, 2.0, space.p)
    down = _nesting_factor(dim, space.p, 2.0)
    # ||x/|x| - y/|y||| <= 2 ||x - y|| / ||x||
    return 2.0 * up * euclid * down


def grid_size(dim: int, resolution: int) -> int:
    if dim == 1:
        return 2
    return (resolution + 1) ** (dim - 2) * 2 * resolution


def _check_dim(space: SpaceSpec) -> None:
    if space.dim > MAX_DIM:
        raise OracleLimitError(
            f"brute-force oracles support dim <= {MAX_DIM}, got {space.dim}",
            dim=space.dim,
        )


def _grid_extreme(obj: _sphere.SphereObjective, space: SpaceSpec, resolution: int, sense: str):
    _check_dim(space)
    reduce = max if sense == "max" else min
    pick = np.max if sense == "max" else np.min
    vals = [float(pick(obj.values(extreme_points(space))))]
    count = 2 * space.dim + 2**space.dim
    for chunk in _euclidean_chunks(space.dim, resolution):
        vals.append(float(pick(obj.values(chunk))))
        count += chunk.shape[0]
    return reduce(vals), count


def brute_sup(terms, space: SpaceSpec, resolution: int = DEFAULT_RESOLUTION, offset: float = 0.0) -> OracleResult:
    """Grid maximum of ``sum w ||L x|| + offset`` on the unit sphere of ``space``."""
    obj = _sphere.SphereObjective(terms, space.p, offset)
    value, count = _grid_extreme(obj, space, resolution, "max")
    lip = sum(abs(t.weight) * analytic_upper(t.matrix, space.p, t.p) for t in obj.terms)
    return OracleResult(value, lip * covering_radius(space, resolution), count)


def brute_op_norm(M, from_: SpaceSpec, to: SpaceSpec, resolution: int = DEFAULT_RESOLUTION) -> OracleResult:
    """Grid maximum of ``||Mv||_to``; the true norm lies in ``[value, value + gap]``."""
    M = as_matrix(M, to.dim, from_.dim)
    return brute_sup([_sphere.Term(1.0, M, to.p)], from_, resolution)


def brute_lower_bound(M, from_: SpaceSpec, to: SpaceSpec, resolution: int = DEFAULT_RESOLUTION) -> OracleResult:
    """Grid minimum of ``||Mv||_to``; the true infimum lies in ``[value - gap, value]``."""
    M = as_matrix(M, to.dim, from_.dim)
    _check_dim(from_)
    obj = _sphere.SphereObjective([_sphere.Term(1.0, M, to.p)], from_.p)
    value, count = _grid_extreme(obj, from_, resolution, "min")
    gap = analytic_upper(M, from_.p, to.p) * covering_radius(from_, resolution)
    return OracleResult(value, gap, count)


def brute_residual(G: FrameSystem, Phi: FrameSystem, k, resolution: int = DEFAULT_RESOLUTION) -> OracleResult:
    """Grid maximum of the (P*) residual over unit ``d`` in ``X_d*``."""
    check_same_spaces(G, Phi)
    D = (Phi.matrix - G.matrix).T
    space = G.space_Xd.dual()
    p_out = G.space_X.dual().p
    terms = [
        _sphere.Term(1.0, D, p_out),
        _sphere.Term(-k.lambda1, G.matrix.T, p_out),
        _sphere.Term(-k.lambda2, Phi.matrix.T, p_out),
    ]
    return brute_sup(terms, space, resolution, offset=-k.mu)


def brute_synthesis_residual(F: FrameSystem, Psi: FrameSystem, k, resolution: int = DEFAULT_RESOLUTION) -> OracleResult:
    """Grid maximum of the (P) residual over unit ``c`` in ``X_d``."""
    check_same_spaces(F, Psi)
    D = (Psi.matrix - F.matrix).T
    terms = [
        _sphere.Term(1.0, D, F.p),
        _sphere.Term(-k.lambda1, F.matrix.T, F.p),
        _sphere.Term(-k.lambda2, Psi.matrix.T, F.p),
    ]
    return brute_sup(terms, F.space_Xd, resolution, offset=-k.mu)


__all__ = [
    "OracleResult",
    "brute_lower_bound",
    "brute_op_norm",
    "brute_residual",
    "brute_sup",
    "brute_synthesis_residual",
    "covering_radius",
    "grid_size",
]
