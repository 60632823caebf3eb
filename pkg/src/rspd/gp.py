"""Integrated mean squared prediction error of a constant-mean Gaussian process.

The kernel is ``exp(-theta * sum_k (x_k - y_k)^2)`` with unit variance. The
kriging predictor estimates the constant mean, so the prediction variance at
``x`` is ``1 - [1, r(x)] M^{-1} [1, r(x)]^T`` with the bordered matrix
``M = [[0, 1^T], [1, C]]``. Integrating over a box only needs
``int r`` and ``int r r^T``, which factorize over coordinates.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.special import comb, ndtr

from rspd.design import as_points
from rspd.errors import DomainError, NumericalError, ResourceError

log = logging.getLogger(__name__)

THETA_TABLE = {2: 24.8, 3: 8.6, 4: 4.6, 5: 2.9, 6: 2.0, 7: 1.5, 8: 1.2, 9: 1.0, 10: 0.85}
DEFAULT_JITTER = 1e-10
COND_WARN = 1e12
DEFAULT_SUBSET_CAP = 10_000


class IllConditionedWarning(RuntimeWarning):
    """The correlation matrix is close to singular."""


@dataclass(frozen=True)
class GpSpec:
    """Gaussian product kernel with decay ``theta``."""

    theta: float
    kernel: str = "gaussian"

    def __post_init__(self):
        if not self.theta > 0 or not math.isfinite(self.theta):
            raise DomainError(f"theta must be positive and finite, got {self.theta}")
        if self.kernel != "gaussian":
            raise DomainError(f"only the gaussian kernel is supported, got {self.kernel!r}")


def theta_default(h: int) -> float:
    """Tabulated decay for ``h`` active dimensions, ``2 <= h <= 10``."""
    try:
        return THETA_TABLE[int(h)]
    except KeyError:
        raise DomainError(f"no default theta for h={h}; supply theta explicitly") from None


def normal_cdf(x):
    """Standard normal CDF."""
    return ndtr(x)


def _spec(spec) -> GpSpec:
    return spec if isinstance(spec, GpSpec) else GpSpec(float(spec))


def _region(region, p):
    a, b = (0.0, 1.0) if region is None else (float(region[0]), float(region[1]))
    if not b > a:
        raise DomainError(f"region needs a < b, got [{a}, {b}]")
    return a, b, (b - a) ** p


def _check_design(X):
    if X.shape[0] < 1:
        raise DomainError("IMSPE needs at least one design point")
    if np.unique(X, axis=0).shape[0] < X.shape[0]:
        raise NumericalError("duplicate design points make the correlation matrix singular")


def correlation(X, Y, theta: float) -> np.ndarray:
    d2 = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-theta * d2)


def _bordered(C):
    n = C.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[0, 1:] = M[1:, 0] = 1.0
    M[1:, 1:] = C
    return M


class _Solve(NamedTuple):
    Y: np.ndarray
    jitter: float
    cond: float


def _solve_bordered(C, rhs, jitter: float) -> _Solve:
    """Solve ``M Y = rhs``, retrying with diagonal jitter if the factorization fails."""
    cond = float(np.linalg.cond(C))
    if cond > COND_WARN:
        warnings.warn(f"correlation matrix condition number {cond:.3g}", IllConditionedWarning,
                      stacklevel=3)
    used = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            Y = scipy.linalg.solve(_bordered(C), rhs, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
            used = jitter
            log.info("bordered solve failed; retrying with jitter %g", jitter)
            Cj = C + jitter * np.eye(C.shape[0])
            try:
                Y = scipy.linalg.solve(_bordered(Cj), rhs, assume_a="sym")
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
                raise NumericalError(f"correlation matrix is singular even with jitter {jitter}") from exc
    return _Solve(Y, used, cond)


def _integrals(X, theta, a, b):
    """``int r_i`` and ``int r_i r_j`` over ``[a, b]^p``."""
    n, p = X.shape
    s2 = math.sqrt(2.0 * theta)
    bvec = np.ones(n)
    B = np.ones((n, n))
    c1 = math.sqrt(math.pi / theta)
    c2 = math.sqrt(math.pi / (2.0 * theta))
    s4 = 2.0 * math.sqrt(theta)
    for k in range(p):
        x = X[:, k]
        bvec *= c1 * (ndtr(s2 * (b - x)) - ndtr(s2 * (a - x)))
        mid = 0.5 * (x[:, None] + x[None, :])
        diff = x[:, None] - x[None, :]
        B *= c2 * np.exp(-theta * diff**2 / 2.0) * (ndtr(s4 * (b - mid)) - ndtr(s4 * (a - mid)))
    return bvec, B


def imspe(design, spec=None, region=None, jitter: float = DEFAULT_JITTER, full_output: bool = False):
    """IMSPE over the box ``[a, b]^p`` by the closed-form trace expression.

    Parameters
    ----------
    design : Design or array_like
    spec : GpSpec or float, optional
        Kernel, or just its ``theta``. Defaults to ``theta_default(p)``.
    region : (float, float), optional
        Per-axis interval ``(a, b)``; ``(0, 1)`` by default.
    jitter : float
        Diagonal added to the correlation matrix only if the plain solve fails.
    full_output : bool
        Also return a dict with the jitter used and the condition number.

    Returns
    -------
    float or (float, dict)
    """
    X = as_points(design)
    _check_design(X)
    n, p = X.shape
    spec = _spec(theta_default(p) if spec is None else spec)
    a, b, vol = _region(region, p)
    bvec, B = _integrals(X, spec.theta, a, b)
    N = np.empty((n + 1, n + 1))
    N[0, 0] = vol
    N[0, 1:] = N[1:, 0] = bvec
    N[1:, 1:] = B
    sol = _solve_bordered(correlation(X, X, spec.theta), N, jitter)
    value = float(vol - np.trace(sol.Y))
    if full_output:
        return value, {"theta": spec.theta, "region": [a, b], "jitter": sol.jitter,
                       "condition": sol.cond}
    return value


class McEstimate(NamedTuple):
    estimate: float
    std_error: float


def kriging_variance(design, points, spec=None, jitter: float = DEFAULT_JITTER) -> np.ndarray:
    """Prediction variance of the constant-mean kriging predictor at ``points``."""
    X = as_points(design)
    _check_design(X)
    spec = _spec(theta_default(X.shape[1]) if spec is None else spec)
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    R = np.hstack([np.ones((Z.shape[0], 1)), correlation(Z, X, spec.theta)])
    W = _solve_bordered(correlation(X, X, spec.theta), R.T, jitter).Y
    return 1.0 - np.einsum("ij,ji->i", R, W)


def imspe_mc(design, spec=None, region=None, samples: int = 100_000, rng=None,
             chunk: int = 20_000) -> McEstimate:
    """Monte Carlo IMSPE: average kriging variance at uniform points, times the region volume."""
    if samples < 1000:
        raise DomainError(f"imspe_mc needs at least 1000 samples, got {samples}")
    X = as_points(design)
    _check_design(X)
    p = X.shape[1]
    a, b, vol = _region(region, p)
    rng = np.random.default_rng(rng)
    vals = np.empty(samples)
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        vals[start:start + m] = kriging_variance(X, rng.uniform(a, b, size=(m, p)), spec)
    return McEstimate(vol * float(vals.mean()), vol * float(vals.std(ddof=1) / math.sqrt(samples)))


def max_proj_imspe(design, h: int, theta: float | None = None, cap: int = DEFAULT_SUBSET_CAP,
                   workers: int = 1) -> float:
    """Largest IMSPE over all ``h``-dimensional coordinate projections.

    Each projection uses ``theta_default(h)`` unless ``theta`` is given.
    """
    X = as_points(design)
    p = X.shape[1]
    if not 1 <= h <= p:
        raise DomainError(f"h must be in 1..{p}, got {h}")
    th = theta_default(h) if theta is None else theta
    count = int(comb(p, h, exact=True))
    if count > cap:
        raise ResourceError(f"{count} projections exceed the cap of {cap}")
    subsets = list(combinations(range(p), h))

    def one(u):
        return imspe(X[:, list(u)], th)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(one, subsets))
    else:
        values = [one(u) for u in subsets]
    return max(values)
