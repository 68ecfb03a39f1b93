#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the two kernel primitives (marginal-benefit table, benefit matrix)
at several instance sizes, plus a full partitioning run, on every available
backend.  Results go to stdout and optionally to a CSV.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--out bench.csv]
"""

import argparse
import csv
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from cohortsched import _kernels
from cohortsched.datagen import DistributionSpec, gen_distribution
from cohortsched.partitioning import PartitionConfig, cohpart
from cohortsched.streams import rng_for

SIZES = [
    ("small", 20, 10, 30, 4),     # n, topics, d, K
    ("medium", 400, 40, 100, 10),
    ("large", 2000, 100, 880, 10),
]


def best_of(repeat, fn, *args):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--out", default=None, help="write results CSV here")
    args = parser.parse_args(argv)

    backends = _kernels.available_backends()
    if "c" not in backends:
        print("note: compiled kernels unavailable; benchmarking the fallback only")

    rows = []
    for label, n, m, d, k in SIZES:
        rng = rng_for(77)
        req = rng.integers(1, 30, size=(n, m))
        inv = 1.0 / req
        centers = rng.integers(0, 15, size=(k, m))
        matrix = gen_distribution(DistributionSpec("normal", n_students=n, n_topics=m), 78)
        for backend in backends:
            mod = _kernels.backend_module(backend)
            t_table = best_of(args.repeat, mod.marginal_table, req, d, False)
            t_bmat = best_of(args.repeat, mod.uniform_benefit_matrix, req, inv, centers)
            _kernels.set_backend(backend)
            t_cohpart = best_of(
                max(1, args.repeat // 2),
                cohpart, matrix, PartitionConfig(K=k, d=d, seed=0),
            )
            rows.append(
                {
                    "size": label, "n": n, "topics": m, "d": d, "K": k, "backend": backend,
                    "marginal_table_ms": round(t_table, 4),
                    "benefit_matrix_ms": round(t_bmat, 4),
                    "cohpart_ms": round(t_cohpart, 3),
                }
            )
    _kernels.set_backend("c" if "c" in backends else "python")

    header = list(rows[0].keys())
    widths = {h: max(len(h), *(len(str(r[h])) for r in rows)) for h in header}
    print("  ".join(h.ljust(widths[h]) for h in header))
    for row in rows:
        print("  ".join(str(row[h]).ljust(widths[h]) for h in header))

    if len(backends) == 2:
        print("\nspeedup (python / c):")
        for label, *_ in SIZES:
            pair = {r["backend"]: r for r in rows if r["size"] == label}
            for col in ("marginal_table_ms", "benefit_matrix_ms", "cohpart_ms"):
                ratio = pair["python"][col] / pair["c"][col]
                print(f"  {label:7s} {col:18s} {ratio:5.1f}x")

    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            writer.writerows(rows)
        print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
