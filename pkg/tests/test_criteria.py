import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial import cKDTree
from scipy.stats import qmc

from rspd.construct import generate_rspd
from rspd.criteria import (
    CriterionReport,
    centered_l2_discrepancy,
    centered_l2_mc,
    extreme_discrepancy_estimate,
    fill_distance_estimate,
    l2_discrepancy,
    l2_mc,
    min_pairwise_distance,
    proj_min_distance,
)
from rspd.errors import DomainError

unit = st.floats(0.0, 1.0, allow_nan=False)


def designs(max_n=12, max_p=4):
    return st.integers(1, max_p).flatmap(
        lambda p: st.integers(2, max_n).flatmap(lambda n: arrays(float, (n, p), elements=unit))
    )


def test_min_distance():
    assert min_pairwise_distance([[0, 0], [1, 1]]) == pytest.approx(math.sqrt(2))
    assert min_pairwise_distance([[0, 0], [0, 0.5], [1, 1]]) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        min_pairwise_distance([[0.2, 0.3]])


def test_fill_distance_trivial():
    assert fill_distance_estimate([[0.5, 0.5]]) == pytest.approx(math.sqrt(2) / 2)
    assert fill_distance_estimate([[0.0]]) == pytest.approx(1.0)


def test_fill_distance_against_fine_grid():
    d = generate_rspd(2, 27)
    axis = np.linspace(0, 1, 2001)
    Z = np.stack(np.meshgrid(axis, axis), -1).reshape(-1, 2)
    oracle = cKDTree(d.X).query(Z)[0].max()
    est, info = fill_distance_estimate(d, full_output=True)
    assert est == pytest.approx(oracle, rel=0.02)
    assert info["method"].startswith("grid")


def test_fill_distance_high_dim_is_seeded():
    d = generate_rspd(4, 40, w=1)
    a = fill_distance_estimate(d, sample_count=2048, rng=5)
    assert a == fill_distance_estimate(d, sample_count=2048, rng=5)
    # the corner farthest from the design is a valid lower bound
    corners = np.array(list(itertools.product([0, 1], repeat=4)), float)
    assert a >= cKDTree(d.X).query(corners)[0].max() - 1e-12


def _naive_proj(X, h):
    n, p = X.shape
    best = math.inf
    for u in itertools.combinations(range(p), h):
        tot = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                tot += np.sum((X[i, list(u)] - X[j, list(u)]) ** 2) ** (-h)
        best = min(best, (2 * tot / (n * (n - 1))) ** (-1 / (2 * h)))
    return best


def test_proj_min_distance():
    assert proj_min_distance([[0, 0], [1, 1]], 2) == pytest.approx(math.sqrt(2))
    assert proj_min_distance([[0.1, 0.2], [0.1, 0.9], [0.5, 0.4]], 1) == 0.0
    X = np.random.default_rng(8).random((8, 3))
    assert proj_min_distance(X, 2) == pytest.approx(_naive_proj(X, 2), rel=1e-12)
    with pytest.raises(DomainError):
        proj_min_distance(X, 4)


@given(designs())
def test_proj_full_dimension_has_single_subset(X):
    p = X.shape[1]
    v = proj_min_distance(X, p)
    sq = [np.sum((a - b) ** 2) for a, b in itertools.combinations(X, 2)]
    if min(sq) == 0:
        assert v == 0.0
    else:
        assert v == pytest.approx(_naive_proj(X, p), rel=1e-9)


def test_centered_l2_values():
    assert centered_l2_discrepancy([[0.5]]) == pytest.approx(math.sqrt(1 / 12))
    X = np.random.default_rng(3).random((20, 3))
    assert centered_l2_discrepancy(X) ** 2 == pytest.approx(qmc.discrepancy(X, method="CD"), rel=1e-12)


@given(designs())
def test_centered_l2_symmetries(X):
    v = centered_l2_discrepancy(X)
    assert centered_l2_discrepancy(X[:, ::-1]) == pytest.approx(v, rel=1e-9, abs=1e-12)
    Y = X.copy()
    Y[:, 0] = 1 - Y[:, 0]
    assert centered_l2_discrepancy(Y) == pytest.approx(v, rel=1e-9, abs=1e-12)


@given(designs())
def test_criteria_row_permutation_invariant(X):
    perm = X[::-1]
    assert centered_l2_discrepancy(perm) == pytest.approx(centered_l2_discrepancy(X), rel=1e-9, abs=1e-12)
    assert l2_discrepancy(perm) == pytest.approx(l2_discrepancy(X), rel=1e-9, abs=1e-12)
    assert min_pairwise_distance(perm) == min_pairwise_distance(X)
    assert proj_min_distance(perm, 1) == pytest.approx(proj_min_distance(X, 1), rel=1e-12)
    if X.shape[1] <= 2 and X.shape[0] <= 8:
        assert extreme_discrepancy_estimate(perm) == pytest.approx(extreme_discrepancy_estimate(X), abs=1e-12)


def test_l2_one_point_against_mc():
    v = l2_discrepancy([[0.5]]) ** 2
    # integral of (1{u <= 1/2 < v} - (v - u))^2 over u < v
    assert v == pytest.approx(1 / 12 - 1 / 4 + 1 / 4, abs=1e-15)
    est, se = l2_mc([[0.5]], 10**6, np.random.default_rng(0))
    assert abs(est - v) <= 3 * se


def test_l2_clustered_design_is_worse():
    rng = np.random.default_rng(4)
    spread = qmc.Sobol(2, scramble=True, seed=4).random(128)[:100]
    clustered = 0.2 * rng.random((100, 2))
    assert l2_discrepancy(clustered) > l2_discrepancy(spread)
    assert l2_discrepancy(spread) == l2_discrepancy(spread.copy())


@pytest.mark.parametrize("seed", range(3))
def test_discrepancy_closed_forms_against_mc(seed):
    rng = np.random.default_rng(seed)
    p, n = int(rng.integers(1, 5)), int(rng.integers(2, 30))
    X = rng.random((n, p))
    est, se = centered_l2_mc(X, 10**6, rng)
    assert abs(centered_l2_discrepancy(X) ** 2 - est) <= 3 * se
    est, se = l2_mc(X, 10**6, rng)
    assert abs(l2_discrepancy(X) ** 2 - est) <= 3 * se


def _naive_extreme(X, anchored=False):
    n, p = X.shape
    V = [np.unique(np.r_[0.0, 1.0, X[:, k]]) for k in range(p)]
    pairs = []
    for k in range(p):
        m = len(V[k])
        pairs.append([(0, b) for b in range(m)] if anchored else
                     [(a, b) for a in range(m) for b in range(a, m)])
    best = 0.0
    for box in itertools.product(*pairs):
        lo = np.array([V[k][a] for k, (a, _) in enumerate(box)])
        hi = np.array([V[k][b] for k, (_, b) in enumerate(box)])
        vol = np.prod(hi - lo)
        closed = np.all((X >= lo) & (X <= hi), axis=1).sum()
        opened = np.all(X < hi, axis=1).sum() if anchored else np.all((X > lo) & (X < hi), axis=1).sum()
        best = max(best, closed / n - vol, vol - opened / n)
    return best


def test_extreme_discrepancy_one_dimensional():
    assert extreme_discrepancy_estimate([[0.5]]) == pytest.approx(1.0)
    assert extreme_discrepancy_estimate([[0.25], [0.75]]) == pytest.approx(0.5)
    assert extreme_discrepancy_estimate([[0.5]], anchored=True) == pytest.approx(0.5)
    assert extreme_discrepancy_estimate([[0.25], [0.75]], anchored=True) == pytest.approx(0.25)


@settings(max_examples=30)
@given(st.integers(1, 2).flatmap(
    lambda p: st.integers(1, 6).flatmap(
        lambda n: arrays(float, (n, p), elements=st.sampled_from([0.0, 0.125, 0.25, 0.4, 0.5, 0.75, 0.9, 1.0])))),
    st.booleans())
def test_extreme_exhaustive_matches_naive(X, anchored):
    v, info = extreme_discrepancy_estimate(X, anchored=anchored, full_output=True)
    assert info["exhaustive"]
    assert v == pytest.approx(_naive_extreme(X, anchored), abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_extreme_search_in_three_dimensions(seed):
    X = np.random.default_rng(seed).random((5, 3))
    v, info = extreme_discrepancy_estimate(X, effort=30, rng=seed, full_output=True)
    assert not info["exhaustive"]
    exact = _naive_extreme(X)
    assert v <= exact + 1e-12
    assert v >= 0.9 * exact


def test_report_json_roundtrip():
    rep = CriterionReport()
    rep.add("mindist", 0.25)
    rep.add("fill", 0.4, seed=3, samples=100)
    doc = json.loads(rep.to_json())
    assert doc["mindist"] == 0.25 and doc["meta"]["fill"]["seed"] == 3
    assert CriterionReport.from_dict(doc) == rep
