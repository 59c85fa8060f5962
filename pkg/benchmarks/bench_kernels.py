"""Time the hot kernels on their numba and pure-numpy paths.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--quick]

Both implementations are imported directly, so one process times both;
MMSENSE_DISABLE_NUMBA only affects which path the package itself selects.
"""

import argparse
import time

import numpy as np

from mmsense import kernels


def best_of(fn, args, repeat: int) -> float:
    fn(*args)  # warmup (JIT compile on the numba path)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_caf_accumulate(repeat: int, quick: bool):
    # one full 0.1 s window on the shipped grid: 17 delays x 101 Doppler bins
    n = 20_000 if quick else 100_000
    rng = np.random.default_rng(0)
    q = rng.standard_normal((17, n)) + 1j * rng.standard_normal((17, n))
    freqs = np.arange(-50, 51) * 10.0
    t = np.arange(n) / 1e6
    rows = [("caf_accumulate", "numpy",
             best_of(kernels._caf_accumulate_np, (q, freqs, t), repeat))]
    if kernels.HAS_NUMBA:
        rows.append(("caf_accumulate", "numba",
                     best_of(kernels.caf_accumulate, (q, freqs, t), repeat)))
    return rows


def bench_col2im(repeat: int, quick: bool):
    # conv backward scatter at training shape: batch 16, 32x32, 8 channels
    batch = 4 if quick else 16
    rng = np.random.default_rng(1)
    dcol6 = rng.standard_normal((batch, 32, 32, 8, 3, 3))
    rows = [("col2im", "numpy", best_of(kernels._col2im_np, (dcol6,), repeat))]
    if kernels.HAS_NUMBA:
        rows.append(("col2im", "numba", best_of(kernels.col2im, (dcol6,), repeat)))
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5, help="timed runs per kernel")
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    print(f"kernel backend: {kernels.numba_mode()}")
    rows = bench_caf_accumulate(args.repeat, args.quick)
    rows += bench_col2im(args.repeat, args.quick)

    by_kernel = {}
    for kernel, path, seconds in rows:
        by_kernel.setdefault(kernel, {})[path] = seconds
    print(f"\n{'kernel':<16} {'path':<6} {'best (ms)':>10} {'vs numpy':>9}")
    for kernel, path, seconds in rows:
        base = by_kernel[kernel]["numpy"]
        print(f"{kernel:<16} {path:<6} {seconds * 1e3:>10.2f} {base / seconds:>8.2f}x")
    if not kernels.HAS_NUMBA:
        print("\nnumba unavailable or disabled; numpy path only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
