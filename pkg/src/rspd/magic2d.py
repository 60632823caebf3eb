"""Analysis of two-dimensional designs built at the magic angle.

The minimum vectors ``y_k`` are the lattice differences that come closest in
the second coordinate for a given spread in the first; they control how
close two design points can be in a one-dimensional projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from rspd.design import as_points
from rspd.errors import DomainError
from rspd.lattice import magic_generator

SQRT3 = math.sqrt(3.0)
# largest index whose closed form stays finite in double precision
_MAX_INDEX = int(math.log(np.finfo(float).max) / math.log(SQRT3 + 1.0)) - 2


@dataclass(frozen=True)
class MinimumVector:
    """The ``k``-th minimum vector, in design units, with its integer coefficients."""

    k: int
    y: tuple[float, float]
    f: tuple[int, int]


def minimum_vector_coefficients(k_max: int) -> list[tuple[int, int]]:
    """Integer ``f`` with ``y_k = f @ G_2 / l`` for ``k = 1..k_max``.

    Uses ``y_1 = (0, 1) G_2 / l``, ``y_2 = (-1, -3) G_2 / l`` and the
    recurrences ``y_{2k+1} = y_{2k-1} - y_{2k}``, ``y_{2k+2} = y_{2k} - 2 y_{2k+1}``.
    """
    coef = [(0, 1), (-1, -3)]
    while len(coef) < k_max:
        m = len(coef) + 1
        a, b = coef[m - 3], coef[m - 2]
        if m % 2:
            coef.append((a[0] - b[0], a[1] - b[1]))
        else:
            coef.append((a[0] - 2 * b[0], a[1] - 2 * b[1]))
    return coef[:k_max]


def minimum_vector_closed_form(m: int, l: float = 1.0) -> tuple[float, float]:
    """Closed form of ``y_m`` (``m >= 1``)."""
    if m % 2:
        k = (m - 1) // 2
        scale = 2.0 ** (k + 1.5) * l
        return (-((SQRT3 + 1.0) ** m) / scale, (SQRT3 - 1.0) ** m / scale)
    k = (m - 2) // 2
    scale = 2.0 ** (k + 1.5) * l
    return ((SQRT3 + 1.0) ** m / scale, (SQRT3 - 1.0) ** m / scale)


def minimum_vectors(k_max: int, l: float = 1.0) -> list[MinimumVector]:
    """Minimum vectors ``y_1 .. y_{k_max}`` for the magic generator scaled by ``1/l``.

    Each closed-form value is checked against its integer combination of the
    generator rows.
    """
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    if l <= 0:
        raise DomainError(f"l must be positive, got {l}")
    if k_max > _MAX_INDEX:
        raise DomainError(f"k_max={k_max} overflows double precision (max {_MAX_INDEX})")
    G = magic_generator()
    out = []
    for m, f in enumerate(minimum_vector_coefficients(k_max), start=1):
        y = minimum_vector_closed_form(m, l)
        via_f = np.array(f, dtype=float) @ G / l
        # the second coordinate cancels heavily in f @ G, so scale by |y_1|
        if np.max(np.abs(via_f - y)) > 1e-12 * max(1.0, abs(y[0])):
            raise ArithmeticError(f"closed form of y_{m} disagrees with its integer form")
        out.append(MinimumVector(m, y, f))
    return out


def verify_prop1(k_max: int, f_bound: int, l: float = 1.0, G=None) -> bool:
    """Brute-force check of the projection-gap property of the magic lattice.

    For every nonzero ``f`` in ``{-f_bound..f_bound}^2`` and ``k <= k_max``: if
    ``x = f @ G / l`` has ``|x_1| < |y_{k,1}|`` then ``|x_2| > y_{k,2}``.
    ``G`` defaults to the magic generator; passing another matrix turns the
    check into a sensitivity control.
    """
    G = magic_generator() if G is None else np.asarray(G, dtype=float)
    r = np.arange(-f_bound, f_bound + 1)
    f = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
    f = f[np.any(f != 0, axis=1)]
    x = f @ G / l
    ax1, ax2 = np.abs(x[:, 0]), np.abs(x[:, 1])
    for mv in minimum_vectors(k_max, l):
        close = ax1 < abs(mv.y[0])
        if np.any(ax2[close] <= mv.y[1]):
            return False
    return True


class GapStats(NamedTuple):
    min_gap: float
    max_gap: float


def gap_stats(design, dim: int) -> GapStats:
    """Smallest and largest gap between adjacent values of coordinate ``dim`` (1-based)."""
    X = as_points(design)
    if X.shape[0] < 2:
        raise DomainError("gap statistics need at least two points")
    if not 1 <= dim <= X.shape[1]:
        raise DomainError(f"dim must be in 1..{X.shape[1]}, got {dim}")
    gaps = np.diff(np.sort(X[:, dim - 1]))
    return GapStats(float(gaps.min()), float(gaps.max()))


def gap_bounds(n: int) -> tuple[float, float]:
    """Quasi-Latin-hypercube bounds on adjacent gaps for an ``n``-point magic design."""
    return (SQRT3 / 6.0) / n, (2.0 * SQRT3 / 3.0 + 1.0) / n


def gap_violations(design, tol: float = 1e-9) -> list[tuple[int, str, float]]:
    """Coordinates of ``design`` whose gaps break :func:`gap_bounds`.

    Returns ``(dim, "min" | "max", value)`` triples; empty means the design passes.
    """
    X = as_points(design)
    lo, hi = gap_bounds(X.shape[0])
    bad = []
    for dim in range(1, X.shape[1] + 1):
        g = gap_stats(X, dim)
        if g.min_gap < lo - tol:
            bad.append((dim, "min", g.min_gap))
        if g.max_gap > hi + tol:
            bad.append((dim, "max", g.max_gap))
    return bad
