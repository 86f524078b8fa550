"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_backends.py --points 200000 --reps 3

Each kernel runs on the same inputs with both backends; outputs are checked
for bitwise equality before timings are reported.
"""
import argparse
import csv
import sys
import time

import numpy as np

from maxball import _backend
from maxball.distance import udf_batch
from maxball.morphology import dilate
from maxball.occupancy import occupancy_batch
from maxball.shapes import parse_shape
from maxball.spatial import build_bvh, build_knn_graph


def best_of(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times)), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shape", default="torus:R=1,r=0.3,res=200x50")
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="optional CSV path")
    args = ap.parse_args(argv)

    if "native" not in _backend.BACKENDS:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1

    mesh = parse_shape(args.shape).mesh()
    bvh = build_bvh(mesh)
    rng = np.random.default_rng(args.seed)
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    pts = lo + rng.random((args.points, 3)) * (hi - lo)
    inner = pts[occupancy_batch(bvh, pts) == 1]
    graph = build_knn_graph(inner, args.k)
    field = udf_batch(bvh, inner)

    kernels = {
        "occupancy": lambda b: occupancy_batch(bvh, pts, threads=args.threads, backend=b),
        "udf": lambda b: udf_batch(bvh, inner, threads=args.threads, backend=b),
        "dilation": lambda b: dilate(field, graph, threads=args.threads, backend=b),
    }
    rows = []
    print(f"{args.shape}: {mesh.n_triangles} triangles, {len(pts)} points ({len(inner)} inside), "
          f"k={args.k}, threads={args.threads}")
    print(f"{'kernel':10s} {'native s':>10s} {'python s':>10s} {'speedup':>8s}")
    for name, fn in kernels.items():
        n_min, n_med, n_out = best_of(lambda: fn("native"), args.reps)
        p_min, p_med, p_out = best_of(lambda: fn("python"), args.reps)
        if not np.array_equal(n_out, p_out):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 2
        rows.append((name, n_min, n_med, p_min, p_med, p_min / n_min))
        print(f"{name:10s} {n_min:10.3f} {p_min:10.3f} {p_min / n_min:8.1f}x")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "native_min", "native_median", "python_min", "python_median", "speedup"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
