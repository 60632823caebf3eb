"""Space-filling criteria: distances, projections and discrepancies."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist
from scipy.special import logsumexp
from scipy.stats import qmc

from rspd.design import as_points
from rspd.errors import DomainError

DEFAULT_GRID = {1: 10001, 2: 201, 3: 41}
DEFAULT_FILL_SAMPLES = 2**14


def _need_pairs(X):
    if X.shape[0] < 2:
        raise DomainError("criterion needs at least two points")


def min_pairwise_distance(design) -> float:
    """Smallest Euclidean distance between two design points."""
    X = as_points(design)
    _need_pairs(X)
    return float(pdist(X).min())


# ---------------------------------------------------------------- fill distance


def _fill_candidates(p, grid_resolution, sample_count, rng):
    if p <= 3:
        res = grid_resolution or DEFAULT_GRID[p]
        axis = np.linspace(0.0, 1.0, res)
        Z = np.stack(np.meshgrid(*([axis] * p), indexing="ij"), axis=-1).reshape(-1, p)
        return Z, f"grid{res}^{p}"
    count = sample_count or DEFAULT_FILL_SAMPLES
    Z = qmc.Halton(d=p, scramble=True, seed=rng).random(count)
    if p <= 16:
        corners = np.array(list(np.ndindex(*([2] * p))), dtype=float)
    else:
        corners = rng.integers(0, 2, size=(4096, p)).astype(float)
    return np.vstack([Z, corners]), f"halton{count}+corners"


def fill_distance_estimate(
    design,
    grid_resolution: int | None = None,
    sample_count: int | None = None,
    rng=None,
    refine: int = 10,
    full_output: bool = False,
):
    """Lower-bound estimate of the fill distance over ``[0, 1]^p``.

    The nearest-design-point distance is maximized over a regular grid
    (``p <= 3``) or a scrambled Halton sample plus the cube corners
    (``p >= 4``); the ``refine`` best candidates are then polished by a
    bounded Nelder-Mead search.

    Parameters
    ----------
    design : Design or array_like
    grid_resolution : int, optional
        Points per axis for the grid; defaults depend on ``p``.
    sample_count : int, optional
        Halton sample size for ``p >= 4``.
    rng : numpy.random.Generator or int, optional
        Seeds the Halton scramble.
    refine : int
        Number of candidates passed to local search.
    full_output : bool
        If true, also return a dict describing the estimator.

    Returns
    -------
    float or (float, dict)
    """
    X = as_points(design)
    n, p = X.shape
    if n < 1:
        raise DomainError("fill distance needs at least one point")
    rng = np.random.default_rng(rng)
    Z, method = _fill_candidates(p, grid_resolution, sample_count, rng)
    tree = cKDTree(X)
    d, _ = tree.query(Z)
    best = float(d.max())
    top = np.argsort(d)[::-1][:refine]
    bounds = [(0.0, 1.0)] * p

    def neg(z):
        return -tree.query(np.clip(z, 0.0, 1.0))[0]

    for i in top:
        res = minimize(neg, Z[i], method="Nelder-Mead", bounds=bounds,
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * p})
        best = max(best, -float(res.fun))
    if full_output:
        return best, {"method": method + "+nelder-mead", "candidates": int(Z.shape[0]),
                      "refined": int(len(top))}
    return best


# ---------------------------------------------------------------- projections


def proj_min_distance(design, h: int) -> float:
    """Worst ``h``-dimensional projection of the averaged inverse-distance criterion.

    For each coordinate subset ``u`` of size ``h`` this computes
    ``{mean_{i<j} ||x_i - x_j||_u^{-2h}}^{-1/(2h)}`` and returns the minimum.
    Coincident projected points give ``0``.
    """
    X = as_points(design)
    n, p = X.shape
    if not 1 <= h <= p:
        raise DomainError(f"h must be in 1..{p}, got {h}")
    _need_pairs(X)
    log_pairs = math.log(n * (n - 1) / 2)
    best = math.inf
    for u in combinations(range(p), h):
        sq = pdist(X[:, u], "sqeuclidean")
        if np.any(sq == 0.0):
            return 0.0
        log_mean = logsumexp(-h * np.log(sq)) - log_pairs
        best = min(best, math.exp(-log_mean / (2 * h)))
    return best


# ---------------------------------------------------------------- L2 discrepancies


def centered_l2_discrepancy(design) -> float:
    """Centered L2 discrepancy (square root of the usual closed form)."""
    X = as_points(design)
    n, p = X.shape
    c = np.abs(X - 0.5)
    single = np.prod(1.0 + 0.5 * c - 0.5 * c**2, axis=1).sum()
    dbl = np.ones((n, n))
    for k in range(p):
        dbl *= 1.0 + 0.5 * c[:, k, None] + 0.5 * c[None, :, k] - 0.5 * np.abs(X[:, k, None] - X[None, :, k])
    sq = (13.0 / 12.0) ** p - 2.0 / n * single + dbl.sum() / n**2
    return math.sqrt(max(sq, 0.0))


def l2_discrepancy(design) -> float:
    """Unanchored L2 discrepancy over boxes ``[u, v)`` (square root of the closed form)."""
    X = as_points(design)
    n, p = X.shape
    single = np.prod(X * (1.0 - X), axis=1).sum()
    dbl = np.ones((n, n))
    for k in range(p):
        xi, xj = X[:, k, None], X[None, :, k]
        dbl *= np.minimum(xi, xj) * (1.0 - np.maximum(xi, xj))
    sq = 12.0**-p - 2.0 ** (1 - p) / n * single + dbl.sum() / n**2
    return math.sqrt(max(sq, 0.0))


def _mc_mean(values):
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def centered_l2_mc(design, samples: int, rng, chunk: int = 20_000):
    """Monte Carlo estimate of the squared centered L2 discrepancy.

    Each sample ``u`` defines, per coordinate, the interval between ``u_k`` and
    its nearest cube vertex; the squared local discrepancy is summed over all
    nonempty coordinate subsets. Returns ``(estimate, std_error)``.
    """
    X = as_points(design)
    n, p = X.shape
    rng = np.random.default_rng(rng)
    subsets = [list(u) for r in range(1, p + 1) for u in combinations(range(p), r)]
    out = np.empty(samples)
    for start in range(0, samples, chunk):
        U = rng.random((min(chunk, samples - start), p))
        lo = np.where(U < 0.5, 0.0, U)
        hi = np.where(U < 0.5, U, 1.0)
        inside = (X[None] >= lo[:, None]) & (X[None] < hi[:, None])
        width = hi - lo
        acc = np.zeros(U.shape[0])
        for u in subsets:
            frac = inside[:, :, u].all(axis=2).mean(axis=1)
            acc += (frac - width[:, u].prod(axis=1)) ** 2
        out[start:start + U.shape[0]] = acc
    return _mc_mean(out)


def l2_mc(design, samples: int, rng, chunk: int = 20_000):
    """Monte Carlo estimate of the squared unanchored L2 discrepancy.

    Integrates ``(A([u, v))/n - vol)^2`` over ``u < v`` coordinatewise by
    sorting uniform pairs; the region has measure ``2^-p``.
    Returns ``(estimate, std_error)``.
    """
    X = as_points(design)
    n, p = X.shape
    rng = np.random.default_rng(rng)
    out = np.empty(samples)
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        A, B = rng.random((m, p)), rng.random((m, p))
        lo, hi = np.minimum(A, B), np.maximum(A, B)
        inside = ((X[None] >= lo[:, None]) & (X[None] < hi[:, None])).all(axis=2)
        out[start:start + m] = (inside.mean(axis=1) - (hi - lo).prod(axis=1)) ** 2
    est, se = _mc_mean(out)
    return est * 2.0**-p, se * 2.0**-p


# ---------------------------------------------------------------- extreme discrepancy


class _Boxes:
    """Grid-indexed box search for the local discrepancy.

    Box corners live on ``{0, 1} U {design coordinates}`` per axis. The excess
    side uses closed boxes (points on the boundary count), the deficit side
    open ones, which are the limits of half-open boxes ``[u, v)``.
    """

    def __init__(self, X, anchored):
        self.n, self.p = X.shape
        self.anchored = anchored
        self.V = [np.unique(np.concatenate(([0.0, 1.0], X[:, k]))) for k in range(self.p)]
        self.idx = np.stack([np.searchsorted(self.V[k], X[:, k]) for k in range(self.p)], axis=1)

    def inside(self, a, b, excess, skip):
        mask = np.ones(self.n, dtype=bool)
        for k in range(self.p):
            if k == skip:
                continue
            ik = self.idx[:, k]
            if excess:
                mask &= (ik >= a[k]) & (ik <= b[k])
            elif self.anchored:
                mask &= ik < b[k]
            else:
                mask &= (ik > a[k]) & (ik < b[k])
        return mask

    def solve_axis(self, k, mask, width, excess):
        """Best ``(a_k, b_k)`` for axis ``k`` with the other axes fixed."""
        V = self.V[k]
        m = V.size
        cum = np.cumsum(np.bincount(self.idx[mask, k], minlength=m))
        cum0 = np.concatenate(([0], cum))  # cum0[j] = points with index < j
        if self.anchored:
            b = np.arange(m)
            cnt = cum0[b + 1] if excess else cum0[b]
            val = cnt / self.n - width * V[b] if excess else width * V[b] - cnt / self.n
            j = int(np.argmax(val))
            return 0, j, float(val[j])
        a, b = np.arange(m)[:, None], np.arange(m)[None, :]
        vol = width * (V[None, :] - V[:, None])
        if excess:
            val = np.where(a <= b, (cum0[b + 1] - cum0[a]) / self.n - vol, -np.inf)
        else:
            val = np.where(a < b, vol - (cum0[np.maximum(b, a + 1)] - cum0[a + 1]) / self.n, -np.inf)
        j = int(np.argmax(val))
        return j // m, j % m, float(val.flat[j])

    def width(self, a, b, skip):
        w = 1.0
        for k in range(self.p):
            if k != skip:
                w *= self.V[k][b[k]] - self.V[k][a[k]]
        return w

    def refine(self, a, b, excess, max_cycles=100):
        best = -np.inf
        for _ in range(max_cycles):
            improved = False
            for k in range(self.p):
                mask = self.inside(a, b, excess, k)
                ak, bk, val = self.solve_axis(k, mask, self.width(a, b, k), excess)
                if val > best + 1e-15:
                    best, improved = val, True
                a[k], b[k] = ak, bk
            if not improved:
                break
        return best

    def exhaustive(self, excess):
        if self.p == 1:
            return self.solve_axis(0, np.ones(self.n, bool), 1.0, excess)[2]
        m0 = self.V[0].size
        best = -np.inf
        pairs = [(0, j) for j in range(m0)] if self.anchored else combinations(range(m0), 2)
        a, b = [0, 0], [0, 0]
        for a0, b0 in pairs:
            a[0], b[0] = a0, b0
            mask = self.inside(a, b, excess, 1)
            best = max(best, self.solve_axis(1, mask, self.width(a, b, 1), excess)[2])
        if excess and not self.anchored:
            # degenerate boxes on axis 0 hold points with zero volume
            for a0 in range(m0):
                a[0] = b[0] = a0
                mask = self.inside(a, b, True, 1)
                best = max(best, self.solve_axis(1, mask, 0.0, True)[2])
        return best


def extreme_discrepancy_estimate(
    design,
    effort: int = 200,
    rng=None,
    anchored: bool = False,
    full_output: bool = False,
):
    """Extreme discrepancy: sup over boxes ``[u, v)`` of ``|A/n - vol|``.

    Box corners are restricted to the grid of design coordinates plus
    ``{0, 1}``, where the supremum is attained. For ``p <= 2`` the search is
    exhaustive and the result exact; for larger ``p`` it is a lower bound from
    ``effort`` random starts, each improved by exact one-axis updates.

    With ``anchored=True`` only boxes ``[0, v)`` are considered, giving the
    star discrepancy.

    Returns
    -------
    float or (float, dict)
        With ``full_output``, a dict with ``exhaustive``, ``effort`` and ``seed``
        information is also returned.
    """
    X = as_points(design)
    n, p = X.shape
    if n < 1:
        raise DomainError("discrepancy needs at least one point")
    boxes = _Boxes(X, anchored)
    exhaustive = p <= 2
    if exhaustive:
        best = max(boxes.exhaustive(True), boxes.exhaustive(False))
    else:
        rng = np.random.default_rng(rng)
        best = -np.inf
        sizes = [v.size for v in boxes.V]
        for start in range(effort):
            for excess in (True, False):
                if start == 0:
                    a = [0] * p
                    b = [m - 1 for m in sizes]
                else:
                    lo = [int(rng.integers(m)) for m in sizes]
                    hi = [int(rng.integers(m)) for m in sizes]
                    a = [0] * p if anchored else [min(x, y) for x, y in zip(lo, hi)]
                    b = [max(x, y) for x, y in zip(lo, hi)]
                best = max(best, boxes.refine(a, b, excess))
    best = float(max(best, 0.0))
    if full_output:
        return best, {"exhaustive": exhaustive, "effort": None if exhaustive else effort}
    return best


# ---------------------------------------------------------------- report


@dataclass
class CriterionReport:
    """Criterion values with estimator metadata.

    ``meta`` maps a criterion name to details such as the seed and sample
    count of a Monte Carlo estimate.
    """

    values: dict[str, float] = field(default_factory=dict)
    meta: dict[str, dict[str, Any]] = field(default_factory=dict)

    def add(self, name: str, value: float, **meta):
        self.values[name] = float(value)
        if meta:
            self.meta[name] = meta

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = dict(self.values)
        out["meta"] = self.meta
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CriterionReport":
        d = dict(d)
        meta = d.pop("meta", {})
        return cls({k: float(v) for k, v in d.items()}, meta)
