"""Command-line interface: ``rspd generate | evaluate | benchmark | magic-check``.

Exit codes: 0 success, 1 other failure, 2 usage error, 3 resource cap,
4 unparseable design file, 5 property check failed.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import logging
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from rspd import baselines, criteria, gp, magic2d
from rspd.construct import DEFAULT_MAX_ROWS, generate_rspd, psi
from rspd.design import as_points
from rspd.errors import DesignParseError, DomainError, ResourceError, RspdError
from rspd.io import design_to_csv, design_to_json, format_value, read_design, write_design

log = logging.getLogger("rspd")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE, EXIT_PARSE, EXIT_PROPERTY = 0, 1, 2, 3, 4, 5

SIMPLE_CRITERIA = ("mindist", "fill", "psi", "cl2c", "l2", "extreme", "imspe", "imspe-inner",
                   "genz-continuous", "genz-gauss")
INDEXED_CRITERIA = ("projmindist", "maximspe")
ALIASES = {"cl2": "cl2c"}
DEFAULT_EVAL = "mindist,psi,cl2c"
DEFAULT_BENCH = ("mindist,fill,psi,projmindist:2,cl2c,l2,imspe,imspe-inner,maximspe:2,"
                 "genz-continuous,genz-gauss")
METHODS = ("rspd", "rspdm", "hammersley", "lhd")
BENCH_HEADER = ["method", "p", "n", "criterion", "value", "runtime_s", "seed"]
INNER_REGION = (0.1, 0.9)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- criteria battery


def parse_criteria(text: str) -> list[str]:
    """Validate a comma list of criterion names, canonicalizing aliases."""
    out = []
    for raw in text.split(","):
        name = raw.strip().lower()
        if not name:
            continue
        name = ALIASES.get(name, name)
        base, _, arg = name.partition(":")
        if base in INDEXED_CRITERIA:
            if not arg.isdigit() or int(arg) < 1:
                raise UsageError(f"criterion {raw!r} needs a positive dimension, e.g. {base}:2")
        elif base not in SIMPLE_CRITERIA or arg:
            raise UsageError(f"unknown criterion {raw!r}")
        out.append(name)
    if not out:
        raise UsageError("no criteria given")
    return out


def run_criteria(design, names, theta=None, seed=0, genz_reps=100, fill_resolution=None,
                 effort=200) -> criteria.CriterionReport:
    """Evaluate ``names`` (as returned by :func:`parse_criteria`) on ``design``."""
    X = as_points(design)
    p = X.shape[1]
    rep = criteria.CriterionReport()
    for name in names:
        base, _, arg = name.partition(":")
        if base == "mindist":
            rep.add(name, criteria.min_pairwise_distance(X))
        elif base == "fill":
            v, info = criteria.fill_distance_estimate(X, grid_resolution=fill_resolution, rng=seed,
                                                      full_output=True)
            rep.add(name, v, seed=seed, **info)
        elif base == "psi":
            rep.add(name, psi(X))
        elif base == "projmindist":
            rep.add(name, criteria.proj_min_distance(X, int(arg)))
        elif base == "cl2c":
            rep.add(name, criteria.centered_l2_discrepancy(X))
        elif base == "l2":
            rep.add(name, criteria.l2_discrepancy(X))
        elif base == "extreme":
            v, info = criteria.extreme_discrepancy_estimate(X, effort=effort, rng=seed, full_output=True)
            rep.add(name, v, seed=None if info["exhaustive"] else seed, **info)
        elif base in ("imspe", "imspe-inner"):
            region = (0.0, 1.0) if base == "imspe" else INNER_REGION
            th = gp.theta_default(p) if theta is None else theta
            v, info = gp.imspe(X, th, region, full_output=True)
            rep.add(name, v, **info)
        elif base == "maximspe":
            h = int(arg)
            th = gp.theta_default(h) if theta is None else theta
            rep.add(name, gp.max_proj_imspe(X, h, theta=th), theta=th)
        elif base.startswith("genz-"):
            family = "continuous" if base == "genz-continuous" else "gauss_peak"
            rng = np.random.default_rng([seed, 0x6E7A])
            errs = [baselines.integration_error(X, baselines.IntegrandSpec.random(family, p, rng))
                    for _ in range(genz_reps)]
            rep.add(name, float(np.mean(errs)), seed=seed, samples=genz_reps)
    return rep


# ---------------------------------------------------------------- helpers


def _env_threads() -> int:
    raw = os.environ.get("RSPD_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"RSPD_THREADS must be an integer, got {raw!r}") from None


def parse_range(text: str) -> list[int]:
    """``"2..5"`` or ``"2,3,7"`` (or a mix) into a sorted list of integers."""
    out = set()
    for part in text.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise UsageError(f"empty range {part!r}")
            out.update(range(lo, hi + 1))
        elif part.isdigit():
            out.add(int(part))
        else:
            raise UsageError(f"cannot parse range {text!r}")
    return sorted(out)


def parse_n_rule(text: str):
    """``"10p"``, ``"5p+10"`` or a fixed integer, returned as a function of ``p``."""
    t = text.replace(" ", "").lower()
    m = re.fullmatch(r"(\d*)p(?:\+(\d+))?", t)
    if m:
        a = int(m.group(1) or 1)
        b = int(m.group(2) or 0)
        return lambda p: a * p + b
    if t.isdigit():
        return lambda p: int(t)
    raise UsageError(f"cannot parse n rule {text!r}; use e.g. 10p, 5p+10 or 50")


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    lattice = args.lattice or ("magic" if args.p == 2 else "astar")
    w = 1 if lattice == "magic" else args.w
    d = generate_rspd(args.p, args.n, w=w, seed=args.seed, lattice=lattice,
                      max_rows=args.max_rows, workers=_env_threads())
    if args.out is None:
        text = design_to_json(d) if args.format == "json" else design_to_csv(d, args.header)
        sys.stdout.write(text)
    else:
        write_design(d, args.out, fmt=args.format, header=args.header)
    prov = d.provenance
    log.info("built n=%d p=%d lattice=%s w=%d l=%.6g psi=%.6g", d.n, d.p, prov.lattice, prov.w,
             prov.l, prov.psi)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    names = parse_criteria(args.criteria)
    d = read_design(args.input, allow_out_of_range=args.allow_out_of_range)
    rep = run_criteria(d, names, theta=args.theta, seed=args.seed, genz_reps=args.genz_reps,
                       fill_resolution=args.fill_resolution, effort=args.effort)
    _emit(rep.to_json(), args.out)
    return EXIT_OK


def build_method(method: str, p: int, n: int, seed: int, w: int, max_rows: int):
    if method == "rspd":
        return generate_rspd(p, n, w=w, seed=seed, lattice="astar", max_rows=max_rows)
    if method == "rspdm":
        return generate_rspd(2, n, seed=seed, lattice="magic", max_rows=max_rows)
    if method == "hammersley":
        return baselines.hammersley(n, p)
    if method == "lhd":
        return baselines.random_lhd(n, p, rng=seed)
    raise UsageError(f"unknown method {method!r}")


def benchmark_rows(methods, ps, n_rule, reps, seed, names, w, theta=None, timing=True,
                   workers=1, max_rows=DEFAULT_MAX_ROWS, genz_reps=100) -> list[list]:
    """Rows ``[method, p, n, criterion, value, runtime_s, seed]`` sorted deterministically."""
    cells = []
    for method in methods:
        for p in ps:
            if method == "rspdm" and p != 2:
                log.info("rspdm is defined for p=2 only; skipping p=%d", p)
                continue
            for r in range(reps):
                cells.append((method, p, n_rule(p), seed + r))

    def run(cell):
        method, p, n, s = cell
        t0 = time.perf_counter()
        d = build_method(method, p, n, s, w, max_rows)
        elapsed = time.perf_counter() - t0 if timing else 0.0
        rep = run_criteria(d, names, theta=theta, seed=s, genz_reps=genz_reps)
        return [[method, p, n, c, rep.values[c], elapsed, s] for c in names]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(run, cells))
    else:
        chunks = [run(c) for c in cells]
    order = {c: i for i, c in enumerate(names)}
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (METHODS.index(r[0]), r[1], r[2], r[6], order[r[3]]))
    return rows


def rows_to_csv(rows) -> str:
    buf = _stdio.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(BENCH_HEADER)
    for method, p, n, crit, value, runtime, seed in rows:
        wr.writerow([method, p, n, crit, format_value(value), format_value(runtime), seed])
    return buf.getvalue()


def cmd_benchmark(args) -> int:
    methods = [m.strip().lower() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    ps = parse_range(args.p_range)
    if any(p < 2 for p in ps):
        raise UsageError("dimensions must be >= 2")
    rows = benchmark_rows(methods, ps, parse_n_rule(args.n_rule), args.reps, args.seed,
                          parse_criteria(args.criteria), args.w, theta=args.theta,
                          timing=not args.no_timing, workers=_env_threads(),
                          max_rows=args.max_rows, genz_reps=args.genz_reps)
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_magic_check(args) -> int:
    failures = []
    if args.input:
        for path in args.input:
            d = read_design(path)
            for dim, kind, value in magic2d.gap_violations(d):
                failures.append(f"{path}: n={d.n} dim={dim} {kind} gap {value:.6g} out of bounds")
        print(f"checked {len(args.input)} design file(s)")
    else:
        ns = parse_range(args.n_range)
        if ns[0] < 2:
            raise UsageError("gap checks need n >= 2")
        for n in ns:
            d = generate_rspd(2, n, seed=args.seed, lattice="magic")
            for dim, kind, value in magic2d.gap_violations(d):
                failures.append(f"n={n} dim={dim} {kind} gap {value:.6g} out of bounds")
        print(f"built {len(ns)} magic design(s) for n in {ns[0]}..{ns[-1]}")
    ok = magic2d.verify_prop1(args.kmax, args.fbound)
    print(f"minimum-vector check k<={args.kmax}, |f|<={args.fbound}: {'pass' if ok else 'FAIL'}")
    if not ok:
        failures.append("minimum-vector check failed")
    for f in failures:
        print(f)
    print("magic-check: " + ("FAIL" if failures else "pass"))
    return EXIT_PROPERTY if failures else EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rspd", description="Rotated sphere packing designs.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a design")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--w", type=int, default=100, help="random rotations to try (forced 1 for magic)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lattice", choices=["astar", "magic"])
    g.add_argument("--out", help="output path; stdout if omitted")
    g.add_argument("--format", choices=["csv", "json"], help="default from extension, else csv")
    g.add_argument("--header", action="store_true", help="write an x1,...,xp header row")
    g.add_argument("--max-rows", type=float, default=DEFAULT_MAX_ROWS)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="compute criteria for a design file")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--criteria", default=DEFAULT_EVAL)
    e.add_argument("--theta", type=float)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--genz-reps", type=int, default=100)
    e.add_argument("--fill-resolution", type=int)
    e.add_argument("--effort", type=int, default=200)
    e.add_argument("--allow-out-of-range", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="compare methods over a grid of dimensions")
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--p-range", default="2..5")
    b.add_argument("--n-rule", default="10p")
    b.add_argument("--reps", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--criteria", default=DEFAULT_BENCH)
    b.add_argument("--w", type=int, default=100)
    b.add_argument("--theta", type=float)
    b.add_argument("--genz-reps", type=int, default=100)
    b.add_argument("--max-rows", type=float, default=DEFAULT_MAX_ROWS)
    b.add_argument("--no-timing", action="store_true", help="write 0 runtimes for byte-stable output")
    b.add_argument("--out")
    b.set_defaults(func=cmd_benchmark)

    m = sub.add_parser("magic-check", help="check gap bounds of magic-angle designs")
    m.add_argument("--n-range", default="2..200")
    m.add_argument("--kmax", type=int, default=6)
    m.add_argument("--fbound", type=int, default=200)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--in", dest="input", action="append", help="check this design instead (repeatable)")
    m.set_defaults(func=cmd_magic_check)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rspd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"rspd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"rspd: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except DesignParseError as exc:
        print(f"rspd: cannot parse design: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (RspdError, OSError) as exc:
        print(f"rspd: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
