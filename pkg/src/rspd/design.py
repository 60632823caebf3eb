"""Design container shared by construction, baselines, criteria and I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Provenance:
    """How a rotated sphere packing design was built.

    ``angles`` holds ``(i, j, alpha)`` triples with 1-based axis indices and
    radians; ``delta`` is the translation applied to the scaled lattice.
    """

    p: int
    n: int
    w: int
    seed: int | None
    lattice: str
    angles: tuple[tuple[int, int, float], ...]
    delta: tuple[float, ...]
    l: float
    psi: float
    s: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "n": self.n,
            "w": self.w,
            "seed": self.seed,
            "lattice": self.lattice,
            "angles": [[i, j, a] for i, j, a in self.angles],
            "delta": list(self.delta),
            "l": self.l,
            "psi": self.psi,
            "s": self.s,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Provenance":
        return cls(
            p=int(d["p"]),
            n=int(d["n"]),
            w=int(d["w"]),
            seed=None if d.get("seed") is None else int(d["seed"]),
            lattice=str(d["lattice"]),
            angles=tuple((int(i), int(j), float(a)) for i, j, a in d.get("angles", [])),
            delta=tuple(float(v) for v in d.get("delta", [])),
            l=float(d["l"]),
            psi=float(d["psi"]),
            s=None if d.get("s") is None else int(d["s"]),
        )


@dataclass(frozen=True, eq=False)
class Design:
    """An ``n x p`` point set, usually inside the unit cube.

    The matrix is copied and made read-only on construction so a design can be
    shared freely.
    """

    X: np.ndarray
    provenance: Provenance | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError(f"design matrix must be 2-D, got shape {X.shape}")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.X
        return self.X.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and self.provenance == other.provenance
        )

    __hash__ = None


def as_points(design) -> np.ndarray:
    """Return the point matrix of a :class:`Design` or array-like as a 2-D float array."""
    if isinstance(design, Design):
        return design.X
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X
