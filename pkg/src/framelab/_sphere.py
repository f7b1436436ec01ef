"""Maximization of sums of weighted norms over an l^p unit sphere.

Every quantity framelab optimizes has the form

    h(x) = sum_k w_k * ||L_k x||_{s_k} / ||x||_p + offset

(operator norms, lower frame bounds with a minus sign, and the residuals of
the closeness conditions).  ``h`` is even and scale invariant, so it is a
function on the projective sphere.

Two tools live here:

* :func:`maximize` -- multi-start projected (sub)gradient ascent with step
  halving, all restarts advanced together as one batch, followed by a
  Nelder-Mead polish of the incumbent when an l^1 or l^inf norm makes the
  objective nonsmooth.
* :func:`certify_max` -- branch and bound over the faces of the cube
  ``{x : max|x_i| = 1}`` that returns a rigorous upper bound on ``sup h``.
  Positive terms are bounded through convexity (vertex maxima), negative
  terms through linear minorants or a column-norm Lipschitz slack.
"""

from __future__ import annotations

import dataclasses
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .spaces import SpaceSpec, _sphere_array, extreme_points, normalize, pnorm

RESTARTS = 32
BNB_MAX_DIM = 4
TOL_OBJECTIVE = 1e-10  # relative gain below which an ascent run stops


class LRUCache:
    """Small thread-safe memo for pure numerical results."""

    def __init__(self, size: int = 512):
        self.size = size
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def put(self, key, value) -> None:
        with self._lock:
            self._data[key] = value
            while len(self._data) > self.size:
                self._data.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


_results = LRUCache(1024)


def terms_key(terms) -> tuple:
    return tuple((float(t.weight), float(t.p), t.matrix.shape, np.ascontiguousarray(t.matrix, dtype=float).tobytes()) for t in terms)


@dataclass(frozen=True)
class Term:
    weight: float
    matrix: np.ndarray
    p: float


@dataclass
class SupResult:
    value: float
    x: np.ndarray
    upper: float | None = None
    evaluations: int = 0
    method: str = ""
    notes: dict = field(default_factory=dict)


def _norm_grad(y: np.ndarray, s: float, nrm: np.ndarray | None = None) -> np.ndarray:
    """Row-wise (sub)gradient of ||y||_s (``nrm`` may pass in the norms)."""
    if s == 1.0:
        return np.sign(y)
    if math.isinf(s):
        g = np.zeros_like(y)
        idx = np.argmax(np.abs(y), axis=1)
        rows = np.arange(y.shape[0])
        g[rows, idx] = np.sign(y[rows, idx])
        return g
    if nrm is None:
        nrm = pnorm(y, s)
    safe = np.where(nrm > 0, nrm, 1.0)[:, None]
    return np.sign(y) * np.abs(y / safe) ** (s - 1.0)


class SphereObjective:
    """``h(x) = sum_k w_k ||L_k x||_{s_k} / ||x||_p + offset`` on R^n."""

    def __init__(self, terms, p_from: float, offset: float = 0.0):
        self.terms = [t for t in terms if t.weight != 0.0]
        if not terms:
            raise ValueError("objective needs at least one term")
        self.dim = terms[0].matrix.shape[1]
        self.p_from = p_from
        self.offset = float(offset)
        self.n_evals = 0

    @property
    def nonsmooth(self) -> bool:
        """True when some norm involved is l^1 or l^inf."""
        exps = [self.p_from] + [t.p for t in self.terms]
        return any(e == 1.0 or math.isinf(e) for e in exps)

    @property
    def space(self) -> SpaceSpec:
        return SpaceSpec(self.dim, self.p_from)

    def numerator(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        self.n_evals += X.shape[0]
        total = np.zeros(X.shape[0])
        for t in self.terms:
            total += t.weight * pnorm(X @ t.matrix.T, t.p)
        return total

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return self.numerator(X) / pnorm(X, self.p_from) + self.offset

    def value(self, x: np.ndarray) -> float:
        return float(self.values(x[None, :])[0])

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values and numerator (sub)gradients of rows of ``X`` in one pass."""
        X = np.atleast_2d(X)
        self.n_evals += X.shape[0]
        total = np.zeros(X.shape[0])
        g = np.zeros_like(X)
        for t in self.terms:
            Y = X @ t.matrix.T
            nrm = pnorm(Y, t.p)
            total += t.weight * nrm
            g += t.weight * (_norm_grad(Y, t.p, nrm) @ t.matrix)
        return total / pnorm(X, self.p_from) + self.offset, g

    def grad(self, X: np.ndarray) -> np.ndarray:
        g = np.zeros_like(X)
        for t in self.terms:
            g += t.weight * (_norm_grad(X @ t.matrix.T, t.p) @ t.matrix)
        return g

    def lipschitz_columns(self, t: Term) -> np.ndarray:
        # ||L (x - c)||_s <= sum_j |x_j - c_j| * ||L e_j||_s
        return pnorm(t.matrix.T, t.p)


def _ascend(
    obj: SphereObjective, X: np.ndarray, max_iter: int = 3000, tol: float = TOL_OBJECTIVE
) -> tuple[np.ndarray, np.ndarray]:
    """Batched projected gradient ascent with per-row step halving.

    A row stops when its step underflows or an accepted step gains less
    than ``tol`` (relative).
    """
    p = obj.p_from
    X = normalize(X, p)
    h, G = obj.evaluate(X)
    step = np.full(X.shape[0], 0.5)
    active = np.ones(X.shape[0], dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Xa, g = X[idx], G[idx]
        # drop the component along the sphere normal; only the tangent part moves h
        nrm = _norm_grad(Xa, p)
        nn = np.einsum("ij,ij->i", nrm, nrm)
        nn[nn == 0] = 1.0
        g = g - (np.einsum("ij,ij->i", g, nrm) / nn)[:, None] * nrm
        gn = np.linalg.norm(g, axis=1)
        stalled = gn == 0
        gn[stalled] = 1.0
        trial = normalize(Xa + (step[idx] / gn)[:, None] * g, p)
        ht, gt = obj.evaluate(trial)
        gain = ht - h[idx]
        better = (gain > 0) & ~stalled
        X[idx[better]] = trial[better]
        h[idx[better]] = ht[better]
        G[idx[better]] = gt[better]
        step[idx[better]] = np.minimum(step[idx[better]] * 2.0, 2.0)
        step[idx[~better]] *= 0.5
        tiny_gain = better & (gain <= tol * np.maximum(1.0, np.abs(ht)))
        done = stalled | (step[idx] < 1e-13) | tiny_gain
        active[idx[done]] = False
    return X, h


def _polish(obj: SphereObjective, x0: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.max(np.abs(x0))) or 1.0

    def neg(z):
        if not np.any(z):
            return np.inf
        return -obj.value(z)

    res = minimize(
        neg,
        x0 / scale,
        method="Nelder-Mead",
        options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 400 * obj.dim},
    )
    x = normalize(np.asarray(res.x, dtype=float), obj.p_from)
    return x, obj.value(x)


def maximize(obj: SphereObjective, seed: int = 0, restarts: int = RESTARTS, polish: bool = True) -> SupResult:
    """Best point found for ``sup h`` over the unit sphere."""
    space = obj.space
    pool = _sphere_array(space, max(8 * restarts, 256), seed)
    if obj.dim <= 8:
        pool = np.vstack([pool, extreme_points(space, half=True)])
    vals = obj.values(pool)
    # half the restarts from the best samples, half from the deterministic random tail
    order = np.argsort(-vals, kind="stable")
    best_idx = list(order[: restarts // 2])
    chosen = set(best_idx)
    for i in range(pool.shape[0] - 1, -1, -1):
        if len(best_idx) >= restarts:
            break
        if i not in chosen:
            best_idx.append(i)
            chosen.add(i)
    X, h = _ascend(obj, pool[np.array(best_idx)].copy())
    k = int(np.argmax(h))
    x_best, h_best = X[k], float(h[k])
    if vals.max() > h_best:
        k = int(np.argmax(vals))
        x_best, h_best = pool[k], float(vals[k])
    if polish and obj.dim > 1 and obj.nonsmooth:
        xp, hp = _polish(obj, x_best)
        if hp > h_best:
            x_best, h_best = xp, hp
    return SupResult(value=h_best, x=x_best, evaluations=obj.n_evals, method="multistart-pga")


def _box_upper(obj: SphereObjective, lo: np.ndarray, hi: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Rigorous upper bound of h over the directions through each box ``[lo, hi]``.

    Two bounds are taken per box and the smaller one kept:

    * crude: numerator bounded over the box itself, divided by the smallest
      (or largest) norm on the box;
    * tangent: the cone over the box is cut by the supporting hyperplane
      ``<a, y> = 1`` of the unit ball at the box center.  The resulting
      polytope contains the ball sector, so convex terms peak at its
      vertices, and the norm on its outer facet is ``1 + O(width^2)``.
      Negative terms use the subgradient minorant at the center, which is
      linear, so the difference is still maximized at a vertex.
    """
    n_boxes = lo.shape[0]
    p = obj.p_from
    center = 0.5 * (lo + hi)
    radius = 0.5 * (hi - lo)
    verts = np.where(corners[None, :, :], hi[:, None, :], lo[:, None, :])
    obj.n_evals += n_boxes * corners.shape[0]

    a = _norm_grad(center, p)
    heights = np.einsum("bvn,bn->bv", verts, a)
    ok = np.all(heights > 0, axis=1)
    W = verts / np.where(heights > 0, heights, 1.0)[:, :, None]
    y0 = center / pnorm(center, p)[:, None]

    pos_box = np.zeros((n_boxes, corners.shape[0]))
    facet = np.zeros_like(pos_box)
    neg_box = np.zeros(n_boxes)
    for t in obj.terms:
        if t.weight > 0:
            pos_box += t.weight * pnorm(verts @ t.matrix.T, t.p)
            facet += t.weight * pnorm(W @ t.matrix.T, t.p)
        else:
            lip = obj.lipschitz_columns(t)
            low = pnorm(center @ t.matrix.T, t.p) - radius @ lip
            neg_box += -t.weight * np.maximum(low, 0.0)
            # linear minorant ||L y|| >= ||L y0|| + <s, y - y0>; subtracting it
            # keeps the facet numerator convex, so vertices still dominate
            ly0 = y0 @ t.matrix.T
            sub = _norm_grad(ly0, t.p) @ t.matrix
            lin = pnorm(ly0, t.p)[:, None] + np.einsum("bvn,bn->bv", W - y0[:, None, :], sub)
            facet += t.weight * lin

    num = pos_box.max(axis=1) - neg_box
    straddle = (lo <= 0) & (hi >= 0)
    min_abs = np.where(straddle, 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    max_abs = np.maximum(np.abs(lo), np.abs(hi))
    crude = np.where(num >= 0, num / pnorm(min_abs, p), num / pnorm(max_abs, p))

    num_t = facet.max(axis=1)
    y_max = pnorm(W, p).max(axis=1)
    tangent = np.where(num_t >= 0, num_t, num_t / y_max)
    ub = np.where(ok, np.minimum(crude, tangent), crude)
    return ub + obj.offset


def certify_max(
    obj: SphereObjective,
    incumbent: SupResult,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_live: int = 6000,
    max_boxes: int = 150_000,
    max_levels: int = 60,
) -> SupResult:
    """Branch and bound certificate for ``sup h``.

    Returns a copy of ``incumbent`` with ``upper`` filled in and ``value`` /
    ``x`` possibly improved by box centers.  The bound stays valid when the
    budget runs out; it is then just looser.
    """
    n = obj.dim
    best, x_best = incumbent.value, incumbent.x
    if n == 1:
        v = obj.value(np.ones(1))
        return SupResult(v, np.ones(1), v, obj.n_evals, incumbent.method + "+exact1d")
    corners = np.array([[(c >> j) & 1 for j in range(n)] for c in range(2**n)], dtype=bool)
    # faces x_k = +1 cover every direction up to sign (h is even)
    lo = -np.ones((n, n))
    hi = np.ones((n, n))
    lo[np.arange(n), np.arange(n)] = 1.0
    ub = _box_upper(obj, lo, hi, corners)
    used = n
    levels = 0
    exhausted = False
    while True:
        centers = 0.5 * (lo + hi)
        cv = obj.values(centers)
        k = int(np.argmax(cv))
        if cv[k] > best:
            best, x_best = float(cv[k]), normalize(centers[k], obj.p_from)
        keep = ub > best
        lo, hi, ub = lo[keep], hi[keep], ub[keep]
        top = float(ub.max()) if ub.size else best
        if top - best <= atol + rtol * max(abs(best), 1.0):
            break
        n_children = lo.shape[0] * 2 ** (n - 1)
        if levels >= max_levels or n_children > max_live or used + n_children > max_boxes:
            exhausted = True
            break
        lo, hi = _split_all(lo, hi)
        ub = _box_upper(obj, lo, hi, corners)
        used += lo.shape[0]
        levels += 1
    upper = max(float(ub.max()) if ub.size else best, best)
    notes = {"boxes": used, "levels": levels, "budget_exhausted": exhausted}
    return SupResult(best, x_best, upper, obj.n_evals, incumbent.method + "+bnb", notes)


def _split_all(lo: np.ndarray, hi: np.ndarray):
    """Halve each box along every coordinate that is not pinned to its face."""
    for j in range(lo.shape[1]):
        free = hi[:, j] > lo[:, j]
        mid = 0.5 * (lo[free, j] + hi[free, j])
        a_lo, a_hi = lo, hi.copy()
        a_hi[free, j] = mid
        b_lo, b_hi = lo[free].copy(), hi[free]
        b_lo[:, j] = mid
        lo, hi = np.concatenate([a_lo, b_lo]), np.concatenate([a_hi, b_hi])
    return lo, hi


def sup_on_sphere(obj: SphereObjective, seed: int = 0, certify: bool = True, **bnb) -> SupResult:
    """:func:`maximize`, then :func:`certify_max` when the dimension allows.

    Results are memoized on the objective's data, so repeated bound
    computations for the same matrices are free.
    """
    key = (terms_key(obj.terms), float(obj.p_from), float(obj.offset), seed, certify, tuple(sorted(bnb.items())))
    res = _results.get(key)
    if res is None:
        res = maximize(obj, seed=seed)
        if certify and obj.dim <= BNB_MAX_DIM:
            res = certify_max(obj, res, **bnb)
        _results.put(key, res)
    return dataclasses.replace(res, x=res.x.copy(), notes=dict(res.notes))
