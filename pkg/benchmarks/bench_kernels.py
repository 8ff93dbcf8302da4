#!/usr/bin/env python3
"""Time the numba and numpy sequence-metric kernels on random permutations.

    python3 benchmarks/bench_kernels.py [--lengths 15,50,200] [--pairs 2000]

The package picks its backend at import time (numba when installed, unless
PERSONASEQ_DISABLE_NUMBA=1); this script calls both tables directly.
"""

import argparse
import time

import numpy as np

from personaseq._accel import HAVE_NUMBA
from personaseq.seqmetrics.kernels import KERNELS


def make_pairs(n, count, seed=0):
    rng = np.random.default_rng(seed)
    a = np.arange(n, dtype=np.int64)
    return [(a, rng.permutation(n).astype(np.int64)) for _ in range(count)]


def time_kernel(fn, pairs, repeats=3):
    fn(*pairs[0])  # warm-up, includes JIT compilation
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a, b in pairs:
            fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best / len(pairs) * 1e6  # microseconds per pair


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", default="15,50,200")
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--kernels", default="all,lcs,lev,lcss")
    args = ap.parse_args()

    backends = sorted(KERNELS)
    if not HAVE_NUMBA:
        print("numba not available: timing the numpy backend only")
    print(f"{'kernel':<6} {'n':>5} " + " ".join(f"{b + ' us':>12}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for n in (int(x) for x in args.lengths.split(",")):
        # long sequences are slow in numpy; keep total work bounded
        pairs = make_pairs(n, max(20, args.pairs * 15 // n))
        for name in args.kernels.split(","):
            times = [time_kernel(KERNELS[b][name], pairs) for b in backends]
            line = f"{name:<6} {n:>5} " + " ".join(f"{t:>12.2f}" for t in times)
            if len(times) == 2:
                line += f"   {times[1] / times[0]:>6.1f}x" if backends[0] == "numba" else ""
            print(line)


if __name__ == "__main__":
    main()
