"""Acceptance suite: one test and one printed PASS/FAIL line per criterion."""

import math
import time

import numpy as np
import pytest
from scipy.spatial import cKDTree

from rspd.baselines import IntegrandSpec, hammersley, integration_error, random_lhd
from rspd.construct import (
    compute_l,
    compute_s,
    count_in_window,
    distinct_columns,
    enumerate_candidates,
    extract,
    find_delta,
    generate_rspd,
)
from rspd.criteria import (
    centered_l2_discrepancy,
    centered_l2_mc,
    extreme_discrepancy_estimate,
    l2_discrepancy,
    l2_mc,
    min_pairwise_distance,
)
from rspd.gp import imspe, imspe_mc, theta_default
from rspd.lattice import (
    a_star_lattice,
    cubic_lattice,
    magic_lattice_2d,
    voronoi_halfwidths,
    voronoi_relevant_vectors,
)
from rspd.magic2d import gap_bounds, gap_stats, verify_prop1
from rspd.rotation import RotationPlan, compose

ASTAR = [1.21, 1.46, 1.77, 2.12, 2.55, 3.06, 3.67, 4.39, 5.25]
CUBIC = [1.57, 2.72, 4.93, 9.20, 17.4, 33.5, 64.9, 126.8, 249.0]


def _shown(value, ref):
    return round(value, len(str(ref).split(".")[1]))


def test_criterion_01_thickness_table(acceptance):
    t0 = time.perf_counter()
    bad = []
    for p in range(2, 11):
        a, c = a_star_lattice(p).theta, cubic_lattice(p).theta
        if _shown(a, ASTAR[p - 2]) != ASTAR[p - 2]:
            bad.append(("astar", p, a))
        if _shown(c, CUBIC[p - 2]) != CUBIC[p - 2]:
            bad.append(("cubic", p, c))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    assert acceptance(1, ok, f"18 thickness values match the table; mismatches={bad}", dt)


def test_criterion_02_worked_example(acceptance):
    t0 = time.perf_counter()
    lat = magic_lattice_2d()
    l = compute_l(2, 20, lat)
    s = compute_s(2, l, lat)
    cand = enumerate_candidates(lat, np.eye(2), l, s)
    delta = find_delta(cand, 20, np.random.default_rng(0))
    X = extract(cand, delta, 20)
    dt = time.perf_counter() - t0
    ok = (
        abs(l - math.sqrt(20 * math.sqrt(3) / 2)) <= 1e-6
        and abs(l - 4.161791) <= 1e-6
        and s == 5
        and cand.grid_rows == 121
        and count_in_window(cand.E, delta, l) == 20
        and X.shape == (20, 2)
        and np.all((X >= 0) & (X <= 1))
        and dt < 1.0
    )
    assert acceptance(2, ok, f"l={l:.6f} s={s} grid={cand.grid_rows} kept={cand.m} "
                             f"delta=({delta[0]:.4f}, {delta[1]:.4f}) n_out={len(X)}", dt)


def _inner_points(d):
    """Points whose lattice Voronoi cell lies in the cube with every relevant neighbour present."""
    prov = d.provenance
    lat = magic_lattice_2d() if prov.lattice == "magic" else a_star_lattice(prov.p)
    R = compose(RotationPlan(prov.p, prov.angles))
    Z = voronoi_relevant_vectors(lat.G, lat.rho_c) @ R / prov.l
    hw = voronoi_halfwidths(Z)
    tree = cKDTree(d.X)
    inner = []
    for i, x in enumerate(d.X):
        if np.all(x - hw >= 0) and np.all(x + hw <= 1) and np.all(tree.query(x + Z)[0] < 1e-9):
            inner.append(i)
    return inner, hw, tree


def test_criterion_03_inner_cell_volumes(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    samples = 10**6
    lines, ok = [], True
    stated = [(2, 27), (3, 30), (4, 40)]
    # larger runs so that every dimension has inner points to test
    extra = [(3, 100), (4, 300)]
    checked = 0
    for p, n in stated + extra:
        d = generate_rspd(p, n, seed=0)
        inner, hw, tree = _inner_points(d)
        worst = 0.0
        for i in inner:
            x = d.X[i]
            U = x + rng.uniform(-1, 1, size=(samples, p)) * hw
            frac = np.mean(tree.query(U)[1] == i)
            box = np.prod(2 * hw)
            se = box * math.sqrt(frac * (1 - frac) / samples)
            z = abs(frac * box - 1 / n) / se
            worst = max(worst, z)
            ok &= z <= 3
            checked += 1
        lines.append(f"({p},{n}) inner={len(inner)} max|z|={worst:.2f}")
    dt = time.perf_counter() - t0
    ok = ok and checked > 0 and dt < 120
    assert acceptance(3, ok, "; ".join(lines), dt)


GRID4 = [(p, n) for p in range(2, 7) for n in (10 * p, 100)]


@pytest.fixture(scope="module")
def criterion4_designs():
    t0 = time.perf_counter()
    designs = [generate_rspd(p, n, w=10, seed=s, lattice="astar") for p, n in GRID4 for s in range(10)]
    spot = generate_rspd(3, 30, w=100, seed=0)
    return designs, spot, time.perf_counter() - t0


def test_criterion_04_exact_n_distinct_projections(acceptance, criterion4_designs):
    designs, spot, dt = criterion4_designs
    bad = [
        (d.p, d.provenance.n, d.provenance.seed)
        for d in designs + [spot]
        if d.n != d.provenance.n or not distinct_columns(d.X, 1e-9)
    ]
    ok = not bad and dt < 600
    assert acceptance(4, ok, f"{len(designs)} builds over {len(GRID4)} (p,n) cells x 10 seeds at w=10 "
                             f"+ w=100 spot check at (3,30); failures={bad}", dt)


def test_criterion_05_magic_gap_sweep(acceptance):
    t0 = time.perf_counter()
    bad = []
    for n in range(2, 201):
        d = generate_rspd(2, n)
        lo, hi = gap_bounds(n)
        for dim in (1, 2):
            g = gap_stats(d, dim)
            if g.min_gap < lo - 1e-9 or g.max_gap > hi + 1e-9:
                bad.append((n, dim))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    assert acceptance(5, ok, f"n=2..200, both coordinates; violations={bad}", dt)


def test_criterion_06_minimum_vectors(acceptance):
    t0 = time.perf_counter()
    ok = verify_prop1(6, 200)
    dt = time.perf_counter() - t0
    assert acceptance(6, ok and dt < 30, "verify_prop1(k_max=6, f_bound=200)", dt)


def test_criterion_07_discrepancy_rate(acceptance):
    t0 = time.perf_counter()
    ns = np.array([8, 16, 32, 64, 128])
    nP = np.array([n * extreme_discrepancy_estimate(generate_rspd(2, int(n))) for n in ns])
    logn = np.log(ns)
    ratio = nP / logn
    # minimax relative fit of nP ~ c log n
    c = 0.5 * (ratio.max() + ratio.min())
    excess = ratio.max() / c - 1
    c_ls = float(nP @ logn / (logn @ logn))
    slope = float(np.polyfit(np.log(logn), np.log(nP), 1)[0])
    dt = time.perf_counter() - t0
    ok = excess <= 0.25 and dt < 120
    assert acceptance(7, ok, f"nP={np.round(nP, 3).tolist()} c={c:.3f} max excess={excess:.1%} "
                             f"(least-squares c={c_ls:.3f}, excess {ratio.max() / c_ls - 1:.1%}); "
                             f"log-log slope {slope:.2f}", dt)


def test_criterion_08_imspe_oracle(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    zs = []
    for k in range(10):
        p = 2 + k % 2
        n = (10, 20)[k // 5]
        X = rng.random((n, p))
        th = theta_default(p)
        for region in [(0.0, 1.0), (0.1, 0.9)]:
            mc = imspe_mc(X, th, region, 10**5, rng)
            zs.append(abs(imspe(X, th, region) - mc.estimate) / mc.std_error)
    dt = time.perf_counter() - t0
    ok = max(zs) <= 3 and dt < 120
    assert acceptance(8, ok, f"20 comparisons (10 designs x 2 regions), max|z|={max(zs):.2f}", dt)


def test_criterion_09_min_distance_floor(acceptance, criterion4_designs):
    designs, spot, dt = criterion4_designs
    worst = min(min_pairwise_distance(d) - 1 / d.provenance.l for d in designs + [spot])
    ok = worst >= -1e-12
    assert acceptance(9, ok, f"min over builds of (mindist - 1/l) = {worst:.3e}")


def test_criterion_10_l2_closed_forms(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    zc, zl = [], []
    for _ in range(10):
        p, n = int(rng.integers(1, 5)), int(rng.integers(2, 51))
        X = rng.random((n, p))
        est, se = centered_l2_mc(X, 10**6, rng)
        zc.append(abs(centered_l2_discrepancy(X) ** 2 - est) / se)
        est, se = l2_mc(X, 10**6, rng)
        zl.append(abs(l2_discrepancy(X) ** 2 - est) / se)
    dt = time.perf_counter() - t0
    ok = max(zc) <= 3 and max(zl) <= 3 and dt < 180
    assert acceptance(10, ok, f"centered max|z|={max(zc):.2f}, unanchored max|z|={max(zl):.2f}", dt)


def _boot_mean(diff, rng, reps=10_000):
    idx = rng.integers(0, len(diff), size=(reps, len(diff)))
    return diff[idx].mean(axis=1)


def test_criterion_11_orderings(acceptance):
    t0 = time.perf_counter()
    ham = hammersley(20, 2)
    md_r, md_l, er_r, er_h, er_l = [], [], [], [], []
    for s in range(50):
        rs, lh = generate_rspd(2, 20, seed=s, lattice="magic"), random_lhd(20, 2, rng=s)
        md_r.append(min_pairwise_distance(rs))
        md_l.append(min_pairwise_distance(lh))
        irng = np.random.default_rng([s, 11])
        specs = [IntegrandSpec.random("continuous", 2, irng) for _ in range(20)]
        er_r.append(np.mean([integration_error(rs, f) for f in specs]))
        er_h.append(np.mean([integration_error(ham, f) for f in specs]))
        er_l.append(np.mean([integration_error(lh, f) for f in specs]))
    brng = np.random.default_rng(0)
    md_lo = np.quantile(_boot_mean(np.array(md_r) - md_l, brng), 0.05)
    h_hi = np.quantile(_boot_mean(np.array(er_r) - er_h, brng), 0.95)
    l_hi = np.quantile(_boot_mean(np.array(er_r) - er_l, brng), 0.95)
    dt = time.perf_counter() - t0
    ok = md_lo >= 0 and h_hi <= 0 and l_hi <= 0 and dt < 300
    assert acceptance(11, ok, f"MinDist RSPDM-LHD 5% bound {md_lo:.4f} (>=0); error RSPDM-Hamm 95% bound "
                              f"{h_hi:.5f}, RSPDM-LHD {l_hi:.5f} (<=0)", dt)
