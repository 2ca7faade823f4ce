"""Time the numba and numpy backends of the two hot kernels.

    python3 benchmarks/bench_kernels.py --tables 200000 --repeat 5
"""
import argparse
import time

import numpy as np

from dualrecord import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tables", type=int, default=200_000, help="batch size for estimate_batch")
    ap.add_argument("--grid", type=int, default=2_000_000, help="grid length for path_profile")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    gen = np.random.default_rng(args.seed)
    cells = gen.integers(1, 500, size=(3, args.tables)).astype(float)
    x0, x1, s1, s2 = 95.0, 70.0, 50.53, 25.53
    n_lo, n_hi = 95, 95 + args.grid

    # compile outside the timed region
    _kernels.estimate_batch_numba(*cells[:, :10], 0)
    _kernels.path_profile_numba(x0, x1, s1, s2, n_lo, n_lo + 10)

    rows = []
    for code, name in ((0, "prone"), (1, "averse")):
        nb = best_of(lambda: _kernels.estimate_batch_numba(*cells, code), args.repeat)
        npy = best_of(lambda: _kernels.estimate_batch_numpy(*cells, code), args.repeat)
        rows.append((f"estimate_batch[{name}] n={args.tables}", nb, npy))
    nb = best_of(lambda: _kernels.path_profile_numba(x0, x1, s1, s2, n_lo, n_hi), args.repeat)
    npy = best_of(lambda: _kernels.path_profile_numpy(x0, x1, s1, s2, n_lo, n_hi), args.repeat)
    rows.append((f"path_profile n={args.grid}", nb, npy))

    print(f"{'kernel':40s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for name, a, b in rows:
        print(f"{name:40s} {1e3 * a:11.2f} {1e3 * b:11.2f} {b / a:8.2f}x")


if __name__ == "__main__":
    main()
