"""Lattices, generator matrices and the geometric constants derived from them.

Generator matrices are stored row-major: row ``i`` is the basis vector
``v_i`` and lattice points are the row vectors ``f @ G`` for integer ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaln

from rspd.errors import DomainError, NumericalError

A_STAR_MAX_DIM = 22


def unit_ball_volume(p: int) -> float:
    """Volume of the unit ball in ``p`` dimensions, ``pi^(p/2) / Gamma(p/2 + 1)``."""
    if int(p) != p or p < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {p!r}")
    return math.exp(0.5 * p * math.log(math.pi) - gammaln(0.5 * p + 1.0))


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """A lattice with its generator and derived constants.

    Attributes
    ----------
    name : str
        Short identifier used in provenance records (``"astar"``, ``"magic"``,
        ``"cubic"``).
    p : int
        Dimension.
    G : ndarray, shape (p, p)
        Generator matrix, one basis vector per row.
    rho_p, rho_c : float
        Packing and covering radius.
    theta : float
        Thickness, covering-ball volume over Voronoi-cell volume.
    det_abs : float
        ``|det G|``, the Voronoi-cell volume.
    eta_norms : ndarray, shape (p,)
        Length of each basis vector's component orthogonal to the other rows.
    """

    name: str
    p: int
    G: np.ndarray
    rho_p: float
    rho_c: float
    theta: float
    det_abs: float
    eta_norms: np.ndarray

    def __post_init__(self):
        for attr in ("G", "eta_norms"):
            arr = np.array(getattr(self, attr), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def density(self) -> float:
        return unit_ball_volume(self.p) * self.rho_p**self.p / self.det_abs


def eta_norms(G) -> np.ndarray:
    """Norms of the components of each row of ``G`` orthogonal to the other rows.

    For row ``j`` this is ``|(I - G_j^T (G_j G_j^T)^{-1} G_j) v_j|`` where
    ``G_j`` is ``G`` with row ``j`` removed.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DomainError(f"generator must be square, got shape {G.shape}")
    p = G.shape[0]
    out = np.empty(p)
    for j in range(p):
        v = G[j]
        others = np.delete(G, j, axis=0)
        if others.shape[0] == 0:
            out[j] = np.linalg.norm(v)
            continue
        try:
            coef = np.linalg.solve(others @ others.T, others @ v)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"rows other than {j + 1} are linearly dependent") from exc
        out[j] = np.linalg.norm(v - others.T @ coef)
    return out


def _spec(name, G, rho_p, rho_c, theta):
    G = np.asarray(G, dtype=float)
    return LatticeSpec(
        name=name,
        p=G.shape[0],
        G=G,
        rho_p=float(rho_p),
        rho_c=float(rho_c),
        theta=float(theta),
        det_abs=float(abs(np.linalg.det(G))),
        eta_norms=eta_norms(G),
    )


def a_star_generator(p: int) -> np.ndarray:
    """Unit-row generator of ``A_p*``: ``sqrt((p+1)/p) I - J / (sqrt(p) (sqrt(p+1) - 1))``."""
    return math.sqrt((p + 1) / p) * np.eye(p) - np.ones((p, p)) / (
        math.sqrt(p) * (math.sqrt(p + 1) - 1.0)
    )


def a_star_lattice(p: int) -> LatticeSpec:
    """The ``A_p*`` lattice, the thinnest known covering for ``2 <= p <= 22``."""
    if int(p) != p or not 2 <= p <= A_STAR_MAX_DIM:
        raise DomainError(f"A_p* is only provided for 2 <= p <= {A_STAR_MAX_DIM}, got {p!r}")
    p = int(p)
    theta = unit_ball_volume(p) * math.sqrt(p + 1) * (p * (p + 2) / (12.0 * (p + 1))) ** (p / 2)
    return _spec("astar", a_star_generator(p), 0.5, math.sqrt((p + 2) / 12.0), theta)


def cubic_lattice(p: int) -> LatticeSpec:
    """The integer lattice ``Z^p`` with identity generator."""
    if int(p) != p or p < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {p!r}")
    p = int(p)
    rho_c = math.sqrt(p) / 2.0
    return _spec("cubic", np.eye(p), 0.5, rho_c, unit_ball_volume(p) * rho_c**p)


def magic_generator() -> np.ndarray:
    """The two-dimensional generator whose unrotated designs are quasi-Latin hypercubes."""
    a = (math.sqrt(3.0) - 1.0) / (2.0 * math.sqrt(2.0))
    b = (math.sqrt(3.0) + 1.0) / (2.0 * math.sqrt(2.0))
    return np.array([[a, -b], [-b, a]])


def hexagonal_generator() -> np.ndarray:
    """Hexagonal lattice with one basis vector on the first axis.

    ``magic_generator() == hexagonal_generator() @ givens(2, 1, 2, pi / 12)``,
    i.e. the magic lattice is this one turned by 15 degrees.
    """
    return np.array([[0.5, -math.sqrt(3.0) / 2.0], [-1.0, 0.0]])


def magic_lattice_2d() -> LatticeSpec:
    """The hexagonal lattice at the magic angle, with the same constants as ``A_2*``."""
    return _spec("magic", magic_generator(), 0.5, math.sqrt(3.0) / 3.0, 2.0 * math.sqrt(3.0) * math.pi / 9.0)


# ---------------------------------------------------------------------------
# Enumeration of lattice points
# ---------------------------------------------------------------------------


def estimate_ball_count(M, radius: float) -> float:
    """Expected number of lattice points of generator ``M`` in a ball of ``radius``."""
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    return unit_ball_volume(p) * radius**p / abs(np.linalg.det(M))


def _expand(lo, cnt):
    """Indices of parents and the child values for a ragged ``lo .. lo+cnt-1`` expansion."""
    parent = np.repeat(np.arange(lo.size), cnt)
    starts = np.cumsum(cnt) - cnt
    offsets = np.arange(parent.size) - np.repeat(starts, cnt)
    return parent, lo[parent] + offsets


def enumerate_lattice_points(M, radius, f_bound=None, box_half=None, chunk_size=250_000):
    """All lattice points ``f @ M`` with ``|f @ M| <= radius``.

    Uses a breadth-first Fincke-Pohst enumeration over the Cholesky factor of
    the Gram matrix, so the work is proportional to the number of points in
    the ball rather than to a full factorial grid of coefficients.

    Parameters
    ----------
    M : array_like, shape (p, p)
        Generator, one basis vector per row.
    radius : float
        Ball radius.
    f_bound : int, optional
        Additionally restrict every coefficient to ``-f_bound .. f_bound``.
    box_half : float, optional
        If given, keep only points inside ``[-box_half, box_half]^p``. The
        last level is expanded in chunks so the full ball is never held in
        memory at once.
    chunk_size : int
        Maximum number of points materialised per chunk at the last level.

    Returns
    -------
    F : ndarray of int64, shape (m, p)
        Integer coefficients, sorted lexicographically.
    X : ndarray, shape (m, p)
        The points ``F @ M``.
    """
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    try:
        U = np.linalg.cholesky(M @ M.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("generator matrix is singular") from exc
    r2 = float(radius) ** 2 * (1.0 + 1e-12) + 1e-12
    F = np.zeros((1, p), dtype=np.int64)
    rem = np.array([r2])

    def children(F, rem, i):
        partial = F[:, i + 1:] @ U[i, i + 1:]
        c = -partial / U[i, i]
        half = np.sqrt(np.maximum(rem, 0.0)) / U[i, i]
        lo = np.ceil(c - half - 1e-9)
        hi = np.floor(c + half + 1e-9)
        if f_bound is not None:
            lo = np.maximum(lo, -f_bound)
            hi = np.minimum(hi, f_bound)
        cnt = np.maximum(hi - lo + 1, 0).astype(np.int64)
        return partial, lo.astype(np.int64), cnt

    for i in range(p - 1, 0, -1):
        partial, lo, cnt = children(F, rem, i)
        parent, vals = _expand(lo, cnt)
        F = F[parent]
        F[:, i] = vals
        rem = rem[parent] - (U[i, i] * vals + partial[parent]) ** 2
        keep = rem >= -1e-9
        F, rem = F[keep], rem[keep]

    partial, lo, cnt = children(F, rem, 0)
    total = np.cumsum(cnt)
    out_F, out_X = [], []
    start = 0
    while start < F.shape[0]:
        base = total[start - 1] if start else 0
        stop = int(np.searchsorted(total, base + chunk_size, side="right"))
        stop = max(stop, start + 1)
        sl = slice(start, stop)
        parent, vals = _expand(lo[sl], cnt[sl])
        Fc = F[sl][parent]
        Fc[:, 0] = vals
        Xc = Fc @ M
        if box_half is not None:
            inside = np.all(np.abs(Xc) <= box_half * (1.0 + 1e-12) + 1e-12, axis=1)
        else:
            inside = np.einsum("ij,ij->i", Xc, Xc) <= r2
        out_F.append(Fc[inside])
        out_X.append(Xc[inside])
        start = stop
    F = np.concatenate(out_F) if out_F else np.zeros((0, p), dtype=np.int64)
    X = np.concatenate(out_X) if out_X else np.zeros((0, p))
    order = np.lexsort(F.T[::-1])
    return F[order], X[order]


# ---------------------------------------------------------------------------
# Voronoi cell of the origin
# ---------------------------------------------------------------------------


def voronoi_relevant_vectors(M, rho_c: float) -> np.ndarray:
    """Voronoi-relevant vectors of the lattice generated by ``M``.

    A nonzero vector ``z`` is relevant iff ``+-z`` are the only shortest
    vectors of its coset ``z + 2L``. Relevant vectors have length at most
    ``2 rho_c``, so a ball enumeration of that radius is sufficient.
    """
    F, Z = enumerate_lattice_points(M, 2.0 * rho_c * (1.0 + 1e-9) + 1e-12)
    nz = np.any(F != 0, axis=1)
    F, Z = F[nz], Z[nz]
    norms = np.einsum("ij,ij->i", Z, Z)
    parity = np.mod(F, 2)
    _, cls = np.unique(parity, axis=0, return_inverse=True)
    cls = cls.ravel()
    keep = np.zeros(len(Z), dtype=bool)
    tol = 1e-9 * max(1.0, float(norms.max(initial=1.0)))
    for c in np.unique(cls):
        idx = np.flatnonzero(cls == c)
        m = norms[idx].min()
        shortest = idx[norms[idx] <= m + tol]
        if shortest.size == 2:
            keep[shortest] = True
    return Z[keep]


def in_voronoi(points, relevant, tol=1e-12) -> np.ndarray:
    """Boolean mask of rows of ``points`` inside the closed Voronoi cell of the origin."""
    points = np.atleast_2d(points)
    half = 0.5 * np.einsum("ij,ij->i", relevant, relevant)
    return np.all(points @ relevant.T <= half + tol, axis=1)


def reduce_to_voronoi(points, relevant, max_iter=10_000) -> np.ndarray:
    """Translate each row of ``points`` by a lattice vector into the Voronoi cell of 0.

    Iteratively subtracts the most violated relevant vector; each step
    strictly decreases the norm so the loop terminates.
    """
    pts = np.array(np.atleast_2d(points), dtype=float)
    half = 0.5 * np.einsum("ij,ij->i", relevant, relevant)
    for _ in range(max_iter):
        viol = pts @ relevant.T - half
        worst = np.argmax(viol, axis=1)
        bad = viol[np.arange(len(pts)), worst] > 1e-12
        if not bad.any():
            return pts
        pts[bad] -= relevant[worst[bad]]
    raise NumericalError("Voronoi reduction did not converge")


def voronoi_halfwidths(relevant) -> np.ndarray:
    """Half-extent of the Voronoi cell of the origin along each coordinate axis."""
    relevant = np.asarray(relevant, dtype=float)
    p = relevant.shape[1]
    b = 0.5 * np.einsum("ij,ij->i", relevant, relevant)
    out = np.empty(p)
    for k in range(p):
        c = np.zeros(p)
        c[k] = -1.0
        res = linprog(c, A_ub=relevant, b_ub=b, bounds=[(None, None)] * p, method="highs")
        if not res.success:
            raise NumericalError(f"Voronoi extent LP failed on axis {k + 1}: {res.message}")
        out[k] = -res.fun
    return out
