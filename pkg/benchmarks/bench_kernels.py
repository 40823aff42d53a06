#!/usr/bin/env python3
"""Compare the compiled text kernels against the pure-Python fallback.

The longest-common-subsequence kernel dominates pairwise lexical
similarity (K*(K-1)/2 LCS calls per record for rouge-L based estimators),
so this is the loop worth compiling. Run after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import random
import time

from genuq import _kernels_py

try:
    from genuq import _ckernels
except ImportError:
    _ckernels = None


def make_pairs(n_pairs: int, length: int, vocab: int, seed: int = 0):
    rng = random.Random(seed)
    return [
        ([rng.randrange(vocab) for _ in range(length)],
         [rng.randrange(vocab) for _ in range(length)])
        for _ in range(n_pairs)
    ]


def time_backend(impl, pairs, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        acc = 0
        for a, b in pairs:
            acc += impl.lcs_length(a, b)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    print(f"{'tokens':>8} {'pairs':>6} {'python':>10} {'compiled':>10} "
          f"{'speedup':>8}")
    for length, n_pairs in [(16, 2000), (64, 500), (256, 60), (1024, 8)]:
        pairs = make_pairs(n_pairs, length, vocab=50)
        py = time_backend(_kernels_py, pairs)
        if _ckernels is None:
            print(f"{length:>8} {n_pairs:>6} {py * 1e3:>9.1f}ms "
                  f"{'(not built)':>10}")
            continue
        cy = time_backend(_ckernels, pairs)
        for a, b in pairs[:20]:  # backends must agree exactly
            assert _ckernels.lcs_length(a, b) == _kernels_py.lcs_length(a, b)
        print(f"{length:>8} {n_pairs:>6} {py * 1e3:>9.1f}ms "
              f"{cy * 1e3:>9.1f}ms {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
