"""Construction of rotated sphere packing designs.

A design is obtained by scaling a covering lattice so that each Voronoi cell
has volume ``1/n``, rotating it, shifting it so that exactly ``n`` lattice
points fall in a centred box of side ``l``, and mapping that box onto the unit
cube. For ``p >= 3`` several random rotations are tried and the one with the
best projection criterion is kept.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from rspd.design import Design, Provenance, as_points
from rspd.errors import ConstructionError, DomainError, ResourceError
from rspd.lattice import (
    LatticeSpec,
    a_star_lattice,
    enumerate_lattice_points,
    estimate_ball_count,
    magic_lattice_2d,
    reduce_to_voronoi,
    unit_ball_volume,
    voronoi_relevant_vectors,
)
from rspd.rotation import RotationPlan, compose, sample_plan

log = logging.getLogger(__name__)

DEFAULT_MAX_ROWS = 20_000_000
DEFAULT_W = 100
PROJECTION_TOL = 1e-9

_relevant_cache: dict[tuple, np.ndarray] = {}


def compute_l(p: int, n: int, lat: LatticeSpec) -> float:
    """Side of the box, in lattice units, that will be mapped onto ``[0, 1]^p``.

    ``l = (n * Omega_p / Theta)^(1/p) * rho_c``, which makes ``l^p = n |det G|``.
    """
    if n < 1:
        raise DomainError(f"run size must be >= 1, got {n}")
    return (n * unit_ball_volume(p) / lat.theta) ** (1.0 / p) * lat.rho_c


def compute_s(p: int, l: float, lat: LatticeSpec) -> int:
    """Coefficient bound beyond which no lattice point can enter the box."""
    if l <= 0:
        raise DomainError(f"box side must be positive, got {l}")
    return int(math.ceil((l * math.sqrt(p) / 2.0 + lat.rho_c) / float(np.min(lat.eta_norms))))


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Lattice points that can end up in the design for one rotation.

    ``E`` holds the rows ``f @ G @ R`` with ``f`` in ``{-s..s}^p`` that lie in
    the enlarged box ``[-l/2 - rho_c, l/2 + rho_c]^p``; ``F`` holds the
    matching integer coefficients. ``grid_rows`` is the size of the full
    factorial coefficient grid before pruning.
    """

    p: int
    l: float
    s: int
    E: np.ndarray
    F: np.ndarray
    lattice: LatticeSpec
    R: np.ndarray
    relevant: np.ndarray
    projections_ok: bool

    @property
    def m(self) -> int:
        return self.E.shape[0]

    @property
    def grid_rows(self) -> int:
        return (2 * self.s + 1) ** self.p


def _relevant_vectors(lat: LatticeSpec) -> np.ndarray:
    key = (lat.name, lat.p, lat.G.tobytes())
    if key not in _relevant_cache:
        _relevant_cache[key] = voronoi_relevant_vectors(lat.G, lat.rho_c)
    return _relevant_cache[key]


def estimate_rows(lat: LatticeSpec, l: float, s: int) -> float:
    """Estimated number of coefficient vectors the enumeration has to visit."""
    radius = (l / 2.0 + lat.rho_c) * math.sqrt(lat.p)
    return min(estimate_ball_count(lat.G, radius), float(2 * s + 1) ** lat.p)


def check_budget(lat: LatticeSpec, l: float, s: int, max_rows: int = DEFAULT_MAX_ROWS):
    est = estimate_rows(lat, l, s)
    if est > max_rows:
        raise ResourceError(
            f"enumerating candidates for p={lat.p} needs about {est:.3g} rows, "
            f"above the cap of {max_rows:.3g}; lower n or p, or raise the cap"
        )
    return est


def distinct_columns(E, tol: float = PROJECTION_TOL) -> bool:
    """True if every column of ``E`` has pairwise-distinct entries (gaps > ``tol``)."""
    E = np.asarray(E)
    if E.shape[0] < 2:
        return True
    gaps = np.diff(np.sort(E, axis=0), axis=0)
    return bool(np.all(gaps > tol))


def enumerate_candidates(lat: LatticeSpec, R, l: float, s: int, max_rows: int = DEFAULT_MAX_ROWS) -> CandidateSet:
    """Enumerate lattice points of ``G @ R`` in the enlarged box, coefficients bounded by ``s``."""
    if s < 0:
        raise DomainError(f"coefficient bound must be >= 0, got {s}")
    check_budget(lat, l, s, max_rows)
    R = np.asarray(R, dtype=float)
    M = lat.G @ R
    half = l / 2.0 + lat.rho_c
    F, E = enumerate_lattice_points(M, half * math.sqrt(lat.p), f_bound=s, box_half=half)
    return CandidateSet(
        p=lat.p,
        l=float(l),
        s=int(s),
        E=E,
        F=F,
        lattice=lat,
        R=R,
        relevant=_relevant_vectors(lat) @ R,
        projections_ok=distinct_columns(E),
    )


def count_in_window(E, delta, l: float) -> int:
    """Number of rows ``e`` with ``e + delta`` inside ``[-l/2, l/2]^p``."""
    return int(np.count_nonzero(np.all(np.abs(np.asarray(E) + delta) <= l / 2.0, axis=1)))


@dataclass
class _Sweep:
    delta: np.ndarray | None  # a shift with count == n, if the segment has one
    best: np.ndarray  # shift whose count is closest to n
    best_count: int
    low: np.ndarray | None  # some shift with count < n
    high: np.ndarray | None  # some shift with count > n


def _sweep(E, half, n, start, direction) -> _Sweep:
    """Count profile of the window along ``start + t * direction``, ``t in [0, 1]``.

    As the shift moves along a line each candidate is inside the window on one
    closed ``t``-interval, so the count is a step function of ``t``. Returns
    the midpoint of the widest interval where it equals ``n``.
    """
    A = E + start
    t_lo = np.zeros(len(E))
    t_hi = np.ones(len(E))
    for k in range(E.shape[1]):
        d = direction[k]
        if d == 0.0:
            outside = np.abs(A[:, k]) > half
            t_hi[outside] = -1.0
            continue
        a = (-half - A[:, k]) / d
        b = (half - A[:, k]) / d
        t_lo = np.maximum(t_lo, np.minimum(a, b))
        t_hi = np.minimum(t_hi, np.maximum(a, b))
    ok = t_lo <= t_hi
    t_lo, t_hi = np.sort(t_lo[ok]), np.sort(t_hi[ok])
    times = np.unique(np.concatenate(([0.0, 1.0], t_lo, t_hi)))
    times = times[(times >= 0.0) & (times <= 1.0)]
    mids = 0.5 * (times[:-1] + times[1:])
    widths = np.diff(times)
    counts = np.searchsorted(t_lo, mids, side="right") - np.searchsorted(t_hi, mids, side="left")

    def at(idx):
        return start + mids[idx] * direction

    hit = np.flatnonzero((counts == n) & (widths > 1e-12))
    delta = at(hit[np.argmax(widths[hit])]) if hit.size else None
    # closest count to n, widest interval among ties
    order = np.lexsort((-widths, np.abs(counts - n)))
    b = order[0]
    lows = np.flatnonzero((counts < n) & (widths > 1e-12))
    highs = np.flatnonzero((counts > n) & (widths > 1e-12))
    return _Sweep(
        delta=delta,
        best=at(b),
        best_count=int(counts[b]),
        low=at(lows[np.argmax(widths[lows])]) if lows.size else None,
        high=at(highs[np.argmax(widths[highs])]) if highs.size else None,
    )


def _axis_chord(gamma, axis, relevant):
    """End points of the Voronoi cell of 0 along the line ``gamma + t e_axis``."""
    h = 0.5 * np.einsum("ij,ij->i", relevant, relevant) - relevant @ gamma
    z = relevant[:, axis]
    pos, neg = z > 1e-15, z < -1e-15
    t_max = np.min(h[pos] / z[pos]) if pos.any() else 0.0
    t_min = np.max(h[neg] / z[neg]) if neg.any() else 0.0
    return t_min, t_max


def find_delta(cand: CandidateSet, n: int, rng: np.random.Generator, max_retries: int = 50, rounds: int = 2) -> np.ndarray:
    """Find a shift ``delta`` in the Voronoi cell of 0 with exactly ``n`` points in the window.

    Draws an anchor in the cell, then sweeps it along each coordinate axis in
    turn over the full chord of the cell; the count along a sweep is a step
    function with unit jumps, so any chord whose count range brackets ``n``
    yields an exact interval. After each unsuccessful sweep the anchor moves
    to the point of the chord whose count was closest to ``n``. Once shifts
    with counts below and above ``n`` have both been seen, the straight segment
    between them (inside the convex cell) is swept, which must hit ``n``.
    Keeping ``delta`` inside the cell guarantees the candidate set is complete
    for every window examined.
    """
    if not cand.projections_ok:
        raise ConstructionError("candidate projections are not distinct; the shift search needs distinct projections")
    if n < 1 or n > cand.m:
        raise ConstructionError(f"cannot place {n} points using {cand.m} candidates")
    E, half, p = cand.E, cand.l / 2.0, cand.p
    Z = cand.relevant
    rho = cand.lattice.rho_c
    low = high = None
    for _ in range(max_retries):
        gamma = reduce_to_voronoi(rng.uniform(-rho, rho, size=p), Z)[0]
        c = count_in_window(E, gamma, cand.l)
        if c == n:
            return gamma
        for _ in range(rounds):
            for axis in range(p):
                t_min, t_max = _axis_chord(gamma, axis, Z)
                if t_max - t_min <= 1e-12:
                    continue
                start = gamma.copy()
                start[axis] += t_min
                direction = np.zeros(p)
                direction[axis] = t_max - t_min
                sw = _sweep(E, half, n, start, direction)
                if sw.delta is not None and count_in_window(E, sw.delta, cand.l) == n:
                    return sw.delta
                low = sw.low if sw.low is not None else low
                high = sw.high if sw.high is not None else high
                gamma = sw.best
            if low is not None and high is not None:
                sw = _sweep(E, half, n, low, high - low)
                if sw.delta is not None and count_in_window(E, sw.delta, cand.l) == n:
                    return sw.delta
    raise ConstructionError(
        f"no shift with exactly {n} points found after {max_retries} anchors; "
        "the lattice projections may be degenerate"
    )


def extract(cand: CandidateSet, delta, n: int) -> np.ndarray:
    """Map the window ``[-l/2, l/2]^p - delta`` onto the unit cube.

    Returns the ``n x p`` matrix ``(e + delta) / l + 1/2`` over the candidates
    inside the window.
    """
    delta = np.asarray(delta, dtype=float)
    shifted = cand.E + delta
    inside = np.all(np.abs(shifted) <= cand.l / 2.0, axis=1)
    if int(inside.sum()) != n:
        raise ConstructionError(f"shift places {int(inside.sum())} points in the window, expected {n}")
    return np.clip(shifted[inside] / cand.l + 0.5, 0.0, 1.0)


def psi(design) -> float:
    """Maximum-projection criterion; lower means better spread projections.

    ``{ (n(n-1))^{-1} sum_{i<j} 1 / prod_k (x_ik - x_jk)^2 }^{1/p}``, summed in
    log space so near-coincident projections do not overflow. Returns ``inf``
    if two points share a coordinate or the value itself exceeds the float
    range, and ``0`` for fewer than two points.
    """
    X = as_points(design)
    n, p = X.shape
    if n < 2:
        return 0.0
    iu, ju = np.triu_indices(n, 1)
    logs = np.zeros(iu.size)
    for k in range(p):
        d = np.abs(X[iu, k] - X[ju, k])
        if np.any(d == 0.0):
            return math.inf
        logs -= 2.0 * np.log(d)
    try:
        return math.exp((logsumexp(logs) - math.log(n * (n - 1))) / p)
    except OverflowError:
        return math.inf


def _resolve_lattice(p: int, lattice: str | None) -> LatticeSpec:
    if lattice is None:
        lattice = "magic" if p == 2 else "astar"
    if lattice == "magic":
        if p != 2:
            raise DomainError("the magic lattice is two-dimensional")
        return magic_lattice_2d()
    if lattice == "astar":
        return a_star_lattice(p)
    raise DomainError(f"unknown lattice {lattice!r}; choose 'astar' or 'magic'")


def _build_one(lat, p, n, l, s, plan, rng, max_rows, max_resamples):
    for attempt in range(max_resamples):
        if plan is None:
            this_plan = sample_plan(p, rng)
        else:
            this_plan = plan
        cand = enumerate_candidates(lat, compose(this_plan), l, s, max_rows)
        if cand.projections_ok:
            break
        if plan is not None:
            raise ConstructionError("the requested rotation gives coincident one-dimensional projections")
        log.warning("rotation with coincident projections discarded (p=%d, attempt %d)", p, attempt + 1)
    else:
        raise ConstructionError(f"no rotation with distinct projections after {max_resamples} draws")
    delta = find_delta(cand, n, rng)
    X = extract(cand, delta, n)
    return X, this_plan, delta, psi(X)


def generate_rspd(
    p: int,
    n: int,
    w: int | None = None,
    seed: int = 0,
    lattice: str | None = None,
    plan: RotationPlan | None = None,
    max_rows: int = DEFAULT_MAX_ROWS,
    max_resamples: int = 20,
    workers: int = 1,
) -> Design:
    """Generate a rotated sphere packing design with ``n`` runs in ``[0, 1]^p``.

    Parameters
    ----------
    p, n : int
        Dimension (``>= 2``) and run size (``>= 1``).
    w : int, optional
        Number of random rotations to try; the design with the smallest
        :func:`psi` is returned (first one on ties). Defaults to 100, and is
        forced to 1 for the magic lattice or when ``plan`` is given.
    seed : int
        Candidate ``k`` draws from ``numpy.random.default_rng([seed, k])`` so the
        result does not depend on how candidates are scheduled.
    lattice : {"magic", "astar"}, optional
        Defaults to ``"magic"`` (unrotated) for ``p == 2`` and ``"astar"`` with
        random Givens rotations otherwise.
    plan : RotationPlan, optional
        Fixed rotation instead of random ones.
    max_rows : int
        Cap on the estimated enumeration size; exceeding it raises
        :class:`~rspd.errors.ResourceError`.
    workers : int
        Threads used to build the ``w`` candidates.
    """
    if int(p) != p or p < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {p!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"run size must be an integer >= 1, got {n!r}")
    p, n = int(p), int(n)
    lat = _resolve_lattice(p, lattice)
    if lat.name == "magic":
        plan = RotationPlan.identity(2) if plan is None else plan
    if plan is not None:
        if plan.p != p:
            raise DomainError(f"rotation plan is for p={plan.p}, design has p={p}")
        w = 1
    w = DEFAULT_W if w is None else int(w)
    if w < 1:
        raise DomainError(f"w must be >= 1, got {w}")

    l = compute_l(p, n, lat)
    s = compute_s(p, l, lat)
    check_budget(lat, l, s, max_rows)

    def job(k):
        rng = np.random.default_rng([int(seed), k])
        return _build_one(lat, p, n, l, s, plan, rng, max_rows, max_resamples)

    if workers > 1 and w > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(w)))
    else:
        results = [job(k) for k in range(w)]

    best = min(range(w), key=lambda k: (results[k][3], k))
    X, used_plan, delta, value = results[best]
    prov = Provenance(
        p=p,
        n=n,
        w=w,
        seed=int(seed),
        lattice=lat.name,
        angles=used_plan.angles,
        delta=tuple(float(v) for v in delta),
        l=float(l),
        psi=float(value),
        s=int(s),
    )
    return Design(X, provenance=prov)
