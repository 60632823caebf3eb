"""Rotation matrices built from Givens rotations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from rspd.errors import DomainError


def givens(p: int, i: int, j: int, alpha: float) -> np.ndarray:
    """``p x p`` Givens rotation in the ``(i, j)`` plane (1-based, ``i < j``).

    Entries ``(i,i), (i,j), (j,i), (j,j)`` are ``cos a, -sin a, sin a, cos a``.
    """
    if not 1 <= i < j <= p:
        raise DomainError(f"need 1 <= i < j <= p, got i={i}, j={j}, p={p}")
    R = np.eye(p)
    c, s = math.cos(alpha), math.sin(alpha)
    R[i - 1, i - 1] = c
    R[i - 1, j - 1] = -s
    R[j - 1, i - 1] = s
    R[j - 1, j - 1] = c
    return R


@dataclass(frozen=True)
class RotationPlan:
    """One angle per axis pair, in lexicographic ``(i, j)`` order."""

    p: int
    angles: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        pairs = [(i, j) for i, j, _ in self.angles]
        expected = list(combinations(range(1, self.p + 1), 2))
        if pairs != expected:
            raise DomainError(
                f"a rotation plan for p={self.p} needs the {len(expected)} pairs "
                "1 <= i < j <= p in lexicographic order"
            )

    @classmethod
    def from_angles(cls, p: int, alphas) -> "RotationPlan":
        """Build a plan from a flat sequence of angles in lexicographic pair order."""
        alphas = [float(a) for a in alphas]
        pairs = list(combinations(range(1, p + 1), 2))
        if len(alphas) != len(pairs):
            raise DomainError(f"p={p} needs {len(pairs)} angles, got {len(alphas)}")
        return cls(p, tuple((i, j, a) for (i, j), a in zip(pairs, alphas)))

    @classmethod
    def identity(cls, p: int) -> "RotationPlan":
        return cls.from_angles(p, [0.0] * (p * (p - 1) // 2))

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, _, a in self.angles])


def compose(plan: RotationPlan) -> np.ndarray:
    """Product of the plan's Givens rotations, left to right in plan order."""
    R = np.eye(plan.p)
    for i, j, alpha in plan.angles:
        # right-multiplying by a Givens rotation only touches columns i and j
        c, s = math.cos(alpha), math.sin(alpha)
        ci, cj = R[:, i - 1].copy(), R[:, j - 1].copy()
        R[:, i - 1] = c * ci + s * cj
        R[:, j - 1] = -s * ci + c * cj
    return R


def sample_plan(p: int, rng: np.random.Generator) -> RotationPlan:
    """Draw every angle independently and uniformly from ``[0, 2 pi)``."""
    k = p * (p - 1) // 2
    return RotationPlan.from_angles(p, rng.uniform(0.0, 2.0 * math.pi, size=k))
