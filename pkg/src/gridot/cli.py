"""Command line front end: compute, batch, bench, verify, bin."""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .cost import load_cost_tables, power_cost
from .errors import GridotError, InfeasibleError
from .graphbuild import build_bipartite, build_multipartite, write_dimacs
from .histogram import (
    DEFAULT_TARGET_TOTAL,
    GridShape,
    Histogram,
    IntegerHistogram,
    bin_points,
    from_dense,
    integerize,
    load_csv,
    load_pgm,
    load_points_csv,
    write_csv,
)
from .netsimplex import INFEASIBLE, OPTIMAL, solve
from .oracle import enumerate_tiny, ssp_solve
from .sinkhorn import SinkhornConfig, improved_sinkhorn_2d, sinkhorn
from .transport import (
    flows_from_solution,
    flows_to_plan,
    plan_from_solution,
    wasserstein,
    write_plan_csv,
)

EXACT_METHODS = ("multipartite", "bipartite")
SCALING_METHODS = ("sinkhorn", "improved-sinkhorn")
DEFAULT_MAX_ARCS = 2**27

BATCH_COLUMNS = [
    "file_a", "file_b", "method", "p", "objective", "distance",
    "runtime_s", "runtime_stddev_s", "pivots", "status", "error",
]
BENCH_COLUMNS = [
    "N", "d", "method", "nodes", "arcs", "pairs",
    "mean_runtime_s", "stddev_runtime_s", "status",
]


def _load_histogram(path: str) -> Histogram:
    p = Path(path)
    if not p.exists():
        raise GridotError(f"no such file: {path}")
    if p.suffix.lower() in (".pgm", ".pnm"):
        return load_pgm(p)
    return load_csv(p)


def _print_kv(pairs) -> None:
    for k, v in pairs:
        print(f"{k}: {v}")


def cmd_compute(args) -> int:
    mu = _load_histogram(args.source)
    nu = _load_histogram(args.target)

    if args.method in EXACT_METHODS:
        want_plan = args.plan_out is not None
        res = wasserstein(
            mu, nu, p=args.p, method=args.method, target_total=args.total,
            want_plan=want_plan,
        )
        _print_kv([
            ("method", res.method),
            ("p", res.p),
            ("nodes", res.stats.node_count),
            ("arcs", res.stats.arc_count),
            ("objective", res.objective),
            ("distance", f"{res.distance:.12g}"),
            ("runtime_s", f"{res.stats.runtime_s:.6f}"),
            ("pivots", res.stats.pivots),
        ])
        if args.plan_out:
            write_plan_csv(res.plan, args.plan_out)
            print(f"plan written to {args.plan_out}")
        if args.dimacs_out:
            imu = integerize(mu, args.total)
            inu = integerize(nu, args.total)
            cost = power_cost(imu.shape, args.p)
            build = build_multipartite if args.method == "multipartite" else build_bipartite
            write_dimacs(build(imu, inu, cost), args.dimacs_out)
            print(f"network written to {args.dimacs_out}")
        return 0

    if args.dimacs_out or args.plan_out:
        raise GridotError("--plan-out/--dimacs-out need an exact method")
    cfg = SinkhornConfig(lam=args.lam, max_iters=args.max_iters, marginal_tol=args.tol)
    fn = improved_sinkhorn_2d if args.method == "improved-sinkhorn" else sinkhorn
    t0 = time.perf_counter()
    res = fn(mu, nu, p=args.p, config=cfg)
    runtime = time.perf_counter() - t0
    _print_kv([
        ("method", args.method),
        ("p", args.p),
        ("lambda", args.lam),
        ("upper_bound", f"{res.upper_bound:.12g}"),
        ("distance", f"{res.upper_bound ** (1.0 / args.p):.12g}"),
        ("iterations", res.iterations),
        ("converged", res.converged),
        ("marginal_error", f"{res.marginal_error:.3e}"),
        ("runtime_s", f"{runtime:.6f}"),
    ])
    return 0


def _batch_pair(path_a: Path, path_b: Path, args) -> dict:
    row = {c: "" for c in BATCH_COLUMNS}
    row.update(file_a=path_a.name, file_b=path_b.name, method=args.method, p=args.p)
    try:
        res = wasserstein(
            _load_histogram(str(path_a)), _load_histogram(str(path_b)),
            p=args.p, method=args.method, target_total=args.total,
        )
        row.update(
            objective=res.objective,
            distance=f"{res.distance:.12g}",
            runtime_s=f"{res.stats.runtime_s:.6f}",
            pivots=res.stats.pivots,
            status="ok",
        )
    except GridotError as exc:
        row.update(status="error", error=str(exc))
    return row


def cmd_batch(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise GridotError(f"not a directory: {args.directory}")
    files = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in (".csv", ".pgm", ".pnm")
    )
    if len(files) < 2:
        raise GridotError(f"need at least two histogram files in {args.directory}")
    pairs = [(a, b) for i, a in enumerate(files) for b in files[i + 1 :]]

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda ab: _batch_pair(*ab, args), pairs))
    else:
        rows = [_batch_pair(a, b, args) for a, b in pairs]

    runtimes = [float(r["runtime_s"]) for r in rows if r["status"] == "ok"]
    summary = {c: "" for c in BATCH_COLUMNS}
    summary.update(
        file_a="summary",
        file_b=f"{len(files)} files",
        method=args.method,
        p=args.p,
        runtime_s=f"{statistics.fmean(runtimes):.6f}" if runtimes else "",
        runtime_stddev_s=f"{statistics.pstdev(runtimes):.6f}" if runtimes else "",
        status=f"{len(runtimes)}/{len(pairs)} ok",
    )
    rows.append(summary)
    _write_csv_rows(args.out, BATCH_COLUMNS, rows)
    return 0


def random_pair(shape: GridShape, total: int, rng) -> tuple[IntegerHistogram, IntegerHistogram]:
    """Benchmark instances: uniform integer masses in [0, 255], balanced to one total."""
    out = []
    for _ in range(2):
        raw = rng.integers(0, 256, size=shape.nbins).astype(np.float64)
        if not raw.any():
            raw[0] = 1.0
        out.append(integerize(from_dense(shape, raw), total))
    return out[0], out[1]


def cmd_bench(args) -> int:
    sizes = [int(t) for t in args.sizes.split(",")]
    dims = [int(t) for t in args.dims.split(",")]
    methods = [t.strip() for t in args.methods.split(",")]
    for m in methods:
        if m not in EXACT_METHODS:
            raise GridotError(f"bench methods must be exact ({EXACT_METHODS}), got {m!r}")
    rows = []
    for n_side in sizes:
        for d in dims:
            shape = GridShape((n_side,) * d)
            n = shape.nbins
            for method in methods:
                if method == "bipartite":
                    nodes, arcs = 2 * n, n * n
                else:
                    nodes, arcs = (d + 1) * n, n * sum(shape.dims)
                row = {c: "" for c in BENCH_COLUMNS}
                row.update(N=n_side, d=d, method=method, nodes=nodes, arcs=arcs, pairs=args.pairs)
                if arcs > args.max_arcs:
                    row.update(status="oom")
                    rows.append(row)
                    continue

                def one_pair(k, shape=shape, n_side=n_side, d=d, method=method):
                    rng = np.random.default_rng([args.seed, n_side, d, k])
                    mu, nu = random_pair(shape, args.total, rng)
                    cost = power_cost(shape, args.p)
                    build = build_bipartite if method == "bipartite" else build_multipartite
                    return solve(build(mu, nu, cost)).stats.runtime_s

                if args.jobs > 1:
                    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                        runtimes = list(pool.map(one_pair, range(args.pairs)))
                else:
                    runtimes = [one_pair(k) for k in range(args.pairs)]
                row.update(
                    mean_runtime_s=f"{statistics.fmean(runtimes):.6f}",
                    stddev_runtime_s=f"{statistics.pstdev(runtimes):.6f}",
                    status="ok",
                )
                rows.append(row)
    _write_csv_rows(args.out, BENCH_COLUMNS, rows)
    return 0


def _write_csv_rows(out, columns, rows) -> None:
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out:
            fh.close()


def _verify_tiny(rng, trials: int) -> int:
    fails = 0
    shapes = [GridShape((2,)), GridShape((4,)), GridShape((2, 2))]
    for _ in range(trials):
        shape = shapes[rng.integers(len(shapes))]
        total = int(rng.integers(1, 7))
        mu = IntegerHistogram(shape, rng.multinomial(total, np.full(shape.nbins, 1 / shape.nbins)))
        nu = IntegerHistogram(shape, rng.multinomial(total, np.full(shape.nbins, 1 / shape.nbins)))
        p = int(rng.integers(1, 3))
        cost = power_cost(shape, p)
        ref = enumerate_tiny(mu, nu, cost).objective
        got = {
            "ssp": ssp_solve(build_multipartite(mu, nu, cost)).objective,
            "bipartite": solve(build_bipartite(mu, nu, cost)).objective,
            "multipartite": solve(build_multipartite(mu, nu, cost)).objective,
        }
        if any(v != ref for v in got.values()):
            fails += 1
    return fails


def _verify_medium(rng, trials: int) -> int:
    fails = 0
    shapes = [GridShape((6, 6)), GridShape((4, 4, 3))]
    for _ in range(trials):
        shape = shapes[rng.integers(len(shapes))]
        mu, nu = random_pair(shape, 500, rng)
        p = int(rng.integers(1, 4))
        cost = power_cost(shape, p)
        a = solve(build_bipartite(mu, nu, cost)).objective
        b = solve(build_multipartite(mu, nu, cost)).objective
        c = ssp_solve(build_multipartite(mu, nu, cost)).objective
        if not (a == b == c):
            fails += 1
    return fails


def _verify_sparse(rng, trials: int) -> int:
    from .graphbuild import FlowNetwork

    fails = 0
    for _ in range(trials):
        n = int(rng.integers(6, 14))
        m = int(rng.integers(n, 3 * n))
        tails = rng.integers(0, n, size=m).astype(np.int32)
        heads = rng.integers(0, n, size=m).astype(np.int32)
        costs = rng.integers(0, 21, size=m).astype(np.int64)
        planted = rng.integers(0, 6, size=m).astype(np.int64)
        supplies = np.zeros(n, np.int64)
        np.add.at(supplies, tails, planted)
        np.subtract.at(supplies, heads, planted)
        net = FlowNetwork(n, tails, heads, costs, supplies, "sparse", GridShape((n,)))
        sol = solve(net)
        if sol.status != OPTIMAL:
            fails += 1
            continue
        try:
            if ssp_solve(net).objective != sol.objective:
                fails += 1
        except InfeasibleError:
            fails += 1
    return fails


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    sections = [
        ("enumeration vs ssp vs simplex on tiny instances", _verify_tiny, args.trials),
        ("bipartite vs multipartite vs ssp on random grids", _verify_medium, args.trials),
        ("simplex vs ssp on random sparse balanced graphs", _verify_sparse, args.trials),
    ]
    failed = 0
    for label, fn, trials in sections:
        fails = fn(rng, trials)
        tag = "PASS" if fails == 0 else "FAIL"
        print(f"{tag} {label} ({trials - fails}/{trials})")
        failed += fails
    return 0 if failed == 0 else 1


def cmd_bin(args) -> int:
    points = load_points_csv(args.points)
    dims = tuple(int(t) for t in args.shape.split(","))
    bounds = None
    if args.bounds:
        bounds = []
        for part in args.bounds.split(","):
            lo, hi = part.split(":")
            bounds.append((float(lo), float(hi)))
    hist = bin_points(points, GridShape(dims), bounds)
    write_csv(hist, args.out)
    print(f"{points.shape[0]} points binned onto {dims} -> {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridot",
        description="Exact Wasserstein distances between histograms via min-cost flow.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("compute", help="distance between two histogram files")
    sp.add_argument("source")
    sp.add_argument("target")
    sp.add_argument("--p", type=int, default=2, help="order of the distance (default 2)")
    sp.add_argument("--method", default="multipartite",
                    choices=EXACT_METHODS + SCALING_METHODS)
    sp.add_argument("--total", type=int, default=DEFAULT_TARGET_TOTAL,
                    help="integerization target total")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0,
                    help="regularization strength for scaling methods")
    sp.add_argument("--max-iters", type=int, default=1000)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--plan-out", help="write the optimal plan as CSV")
    sp.add_argument("--dimacs-out", help="write the built network in DIMACS min format")
    sp.set_defaults(fn=cmd_compute)

    sp = sub.add_parser("batch", help="all pairwise distances in a directory")
    sp.add_argument("directory")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--method", default="multipartite", choices=EXACT_METHODS)
    sp.add_argument("--total", type=int, default=DEFAULT_TARGET_TOTAL)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", help="output CSV (default stdout)")
    sp.set_defaults(fn=cmd_batch)

    sp = sub.add_parser("bench", help="runtime sweep over sizes and dimensions")
    sp.add_argument("--sizes", default="8,16", help="comma-separated side lengths")
    sp.add_argument("--dims", default="2", help="comma-separated dimensions")
    sp.add_argument("--methods", default="bipartite,multipartite")
    sp.add_argument("--pairs", type=int, default=3)
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--total", type=int, default=10**6)
    sp.add_argument("--max-arcs", type=int, default=DEFAULT_MAX_ARCS,
                    help="refuse to build networks with more arcs (emit an oom row)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", help="output CSV (default stdout)")
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("verify", help="cross-check the solvers against the oracles")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=25)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("bin", help="bin a point-cloud CSV onto a grid")
    sp.add_argument("points")
    sp.add_argument("--shape", required=True, help="comma-separated bin counts")
    sp.add_argument("--bounds", help="per-axis min:max, comma-separated (default data range)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_bin)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except GridotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
