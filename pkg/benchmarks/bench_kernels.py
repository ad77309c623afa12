"""Benchmark the compiled scatter kernels against the numpy reference.

Both backends are imported directly so a single process can time the two
side by side; results also double as a parity check on random inputs.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import time

import numpy as np

from liftguard.kernels import _reference

try:
    from liftguard.kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_zbuffer(n, repeat, rng):
    width, height = 1280, 800
    iu = rng.integers(0, width, n)
    iv = rng.integers(0, height, n)
    z = rng.uniform(0.5, 60.0, n)
    rows = []
    ref = _reference.zbuffer_min(iu, iv, z, width, height)
    rows.append(("zbuffer_min", "reference",
                 timeit(lambda: _reference.zbuffer_min(iu, iv, z, width, height), repeat)))
    if _core is not None:
        out = _core.zbuffer_min(iu, iv, z, width, height)
        np.testing.assert_array_equal(out, ref)
        rows.append(("zbuffer_min", "compiled",
                     timeit(lambda: _core.zbuffer_min(iu, iv, z, width, height), repeat)))
    return rows


def bench_voxels(n, repeat, rng):
    points = rng.uniform(-30.0, 30.0, (n, 3))
    keys = np.ascontiguousarray(
        (np.floor(points / 0.05).astype(np.int64) * [1, 1 << 21, 1 << 42]).sum(axis=1)
    )
    rows = []
    ref = _reference.voxel_centroids(keys, points)
    rows.append(("voxel_centroids", "reference",
                 timeit(lambda: _reference.voxel_centroids(keys, points), repeat)))
    if _core is not None:
        out = _core.voxel_centroids(keys, points)
        np.testing.assert_allclose(out, ref, atol=1e-12)
        rows.append(("voxel_centroids", "compiled",
                     timeit(lambda: _core.voxel_centroids(keys, points), repeat)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=500_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        print("compiled backend not built; timing the reference only")
    rng = np.random.default_rng(0)
    rows = bench_zbuffer(args.points, args.repeat, rng)
    rows += bench_voxels(args.points, args.repeat, rng)

    print(f"{args.points} points, best of {args.repeat}")
    print(f"{'kernel':<18}{'backend':<12}{'time (ms)':>10}")
    base = {}
    for kernel, backend, t in rows:
        line = f"{kernel:<18}{backend:<12}{t * 1e3:>10.2f}"
        if backend == "reference":
            base[kernel] = t
        else:
            line += f"   ({base[kernel] / t:.1f}x)"
        print(line)


if __name__ == "__main__":
    main()
