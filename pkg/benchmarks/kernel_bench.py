#!/usr/bin/env python3
"""Timing comparison of the compiled assignment kernels against the pure
numpy fallback.

Both implementations live in gridcvt.kernels; the public entry points
dispatch to the compiled versions when numba imported cleanly (set
CVT_DISABLE_NUMBA=1 to force the fallback package-wide). This script
times both in one process, checks they agree, and prints a table.

Usage:
    python benchmarks/kernel_bench.py
    python benchmarks/kernel_bench.py --points 200000 --repeats 9 --out bench.csv
"""

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from gridcvt import kernels


def timeit(fn, repeats):
    """Median wall time in ms; the first (warm-up) call is not timed."""
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(samples)


def make_case(n_points, n_centroids, ndim, seed):
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 1.0, size=(n_points, ndim))
    centroids = rng.uniform(-1.0, 1.0, size=(n_centroids, ndim))
    weights = rng.uniform(0.5, 1.5, size=n_points)
    return points, centroids, weights


def run_case(n_points, n_centroids, ndim, repeats, seed):
    points, centroids, weights = make_case(n_points, n_centroids, ndim, seed)

    labels_np, dist_np = kernels._nearest_assign_numpy(points, centroids)
    labels_pub, dist_pub = kernels.nearest_assign(points, centroids)
    if not np.array_equal(labels_np, labels_pub):
        raise SystemExit("backend disagreement in nearest_assign; refusing to time")
    if not np.allclose(dist_np, dist_pub, rtol=0.0, atol=1e-12):
        raise SystemExit("backend disagreement in distances; refusing to time")

    rows = []
    t_pub = timeit(lambda: kernels.nearest_assign(points, centroids), repeats)
    t_np = timeit(lambda: kernels._nearest_assign_numpy(points, centroids), repeats)
    rows.append(("nearest_assign", n_points, n_centroids, ndim, t_pub, t_np))

    labels = labels_pub
    t_pub = timeit(
        lambda: kernels.accumulate_clusters(points, weights, labels, n_centroids),
        repeats,
    )
    t_np = timeit(
        lambda: kernels._accumulate_numpy(points, weights, labels, n_centroids),
        repeats,
    )
    rows.append(("accumulate_clusters", n_points, n_centroids, ndim, t_pub, t_np))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=100_000, help="points per case")
    ap.add_argument("--centroids", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=5, help="timed repeats per kernel")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="also write the table to this CSV")
    args = ap.parse_args(argv)

    print(f"backend: {kernels.BACKEND} (numba available: {kernels.NUMBA_AVAILABLE})")
    if not kernels.USE_NUMBA:
        print("note: public path IS the numpy fallback here, expect ratio ~1")

    all_rows = []
    for ndim in (2, 3, 6):
        all_rows.extend(
            run_case(args.points, args.centroids, ndim, args.repeats, args.seed)
        )

    header = ("kernel", "points", "centroids", "ndim", f"{kernels.BACKEND}_ms", "numpy_ms", "speedup")
    print(f"\n{header[0]:<20} {header[1]:>8} {header[2]:>9} {header[3]:>4} "
          f"{header[4]:>10} {header[5]:>10} {header[6]:>8}")
    out_rows = []
    for kernel, n_pts, n_cent, ndim, t_pub, t_np in all_rows:
        speedup = t_np / t_pub if t_pub > 0 else float("inf")
        print(f"{kernel:<20} {n_pts:>8} {n_cent:>9} {ndim:>4} "
              f"{t_pub:>10.3f} {t_np:>10.3f} {speedup:>7.2f}x")
        out_rows.append((kernel, n_pts, n_cent, ndim, f"{t_pub:.3f}", f"{t_np:.3f}", f"{speedup:.2f}"))

    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(out_rows)
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
