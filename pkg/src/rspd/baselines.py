"""Reference designs and Genz test integrands."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from rspd.design import Design, as_points
from rspd.errors import DomainError

DEFAULT_SCALE = 5.0


def first_primes(k: int) -> list[int]:
    primes: list[int] = []
    c = 2
    while len(primes) < k:
        if all(c % q for q in primes if q * q <= c):
            primes.append(c)
        c += 1
    return primes


def radical_inverse(i, base: int) -> np.ndarray:
    """Base-``base`` radical inverse of the nonnegative integers ``i``."""
    i = np.array(i, dtype=np.int64)
    out = np.zeros(i.shape)
    f = 1.0 / base
    while np.any(i > 0):
        out += f * (i % base)
        i //= base
        f /= base
    return out


def hammersley(n: int, p: int) -> Design:
    """Hammersley set: ``(i/n, phi_2(i), phi_3(i), ...)`` for ``i = 0..n-1``."""
    if n < 1 or p < 1:
        raise DomainError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    i = np.arange(n)
    cols = [i / n] + [radical_inverse(i, b) for b in first_primes(p - 1)]
    return Design(np.column_stack(cols), meta={"method": "hammersley"})


def random_lhd(n: int, p: int, rng=None) -> Design:
    """Random Latin hypercube: one point per bin ``[j/n, (j+1)/n)`` in every column."""
    if n < 1 or p < 1:
        raise DomainError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(rng)
    perms = np.column_stack([rng.permutation(n) for _ in range(p)])
    return Design((perms + rng.random((n, p))) / n, meta={"method": "lhd"})


@dataclass(frozen=True)
class IntegrandSpec:
    """A Genz integrand: ``continuous`` is ``exp(-a sum |x_k - d_k|)``,
    ``gauss_peak`` is ``exp(-a sum (x_k - d_k)^2)``, with ``a = scale``."""

    family: str
    d: tuple[float, ...]
    scale: float = DEFAULT_SCALE

    def __post_init__(self):
        if self.family not in ("continuous", "gauss_peak"):
            raise DomainError(f"unknown Genz family {self.family!r}")
        d = tuple(float(v) for v in np.atleast_1d(self.d))
        if not all(0.0 <= v <= 1.0 for v in d):
            raise DomainError("Genz locations d must lie in [0, 1]")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "d", d)

    @classmethod
    def random(cls, family: str, p: int, rng, scale: float = DEFAULT_SCALE) -> "IntegrandSpec":
        """Locations drawn i.i.d. uniform on ``[0, 1]``."""
        return cls(family, tuple(np.random.default_rng(rng).random(p)), scale)


def genz_value(x, spec: IntegrandSpec):
    """Evaluate the integrand at one point or at each row of ``x``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(spec.d)
    diff = x - d
    if spec.family == "continuous":
        e = np.abs(diff).sum(axis=-1)
    else:
        e = (diff**2).sum(axis=-1)
    return np.exp(-spec.scale * e)


def genz_true_mean(spec: IntegrandSpec) -> float:
    """Exact integral over the unit cube, as a product of 1-D integrals."""
    a = spec.scale
    d = np.asarray(spec.d)
    if spec.family == "continuous":
        f = (2.0 - np.exp(-a * d) - np.exp(-a * (1.0 - d))) / a
    else:
        r = math.sqrt(2.0 * a)
        f = math.sqrt(math.pi / a) * (ndtr(r * (1.0 - d)) - ndtr(-r * d))
    return float(np.prod(f))


def integration_error(design, spec: IntegrandSpec) -> float:
    """Absolute error of the equal-weight cubature rule given by the design."""
    X = as_points(design)
    if X.shape[1] != len(spec.d):
        raise DomainError(f"design has p={X.shape[1]} but integrand has p={len(spec.d)}")
    return abs(float(genz_value(X, spec).mean()) - genz_true_mean(spec))
