"""Pure-Python implementations of the hot text-comparison kernels.

Used when the compiled extension is unavailable (or forced via
GENUQ_PURE_PYTHON=1). Must stay behaviorally identical to _ckernels.
"""

from __future__ import annotations

BACKEND = "python"


def lcs_length(a: list[int], b: list[int]) -> int:
    """Length of the longest common subsequence of two id sequences."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if x == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                pj, cj = prev[j], cur[j - 1]
                cur[j] = pj if pj >= cj else cj
        prev = cur
    return prev[-1]


def clipped_ngram_matches(a: list[int], b: list[int], n: int) -> tuple[int, int]:
    """(clipped matches, candidate n-gram count) for order-n n-grams.

    Candidate n-gram counts are clipped at the reference counts, the
    standard modified-precision numerator.
    """
    if len(a) < n:
        return 0, 0
    ref_counts: dict[tuple[int, ...], int] = {}
    for i in range(len(b) - n + 1):
        g = tuple(b[i:i + n])
        ref_counts[g] = ref_counts.get(g, 0) + 1
    cand_counts: dict[tuple[int, ...], int] = {}
    total = len(a) - n + 1
    for i in range(total):
        g = tuple(a[i:i + n])
        cand_counts[g] = cand_counts.get(g, 0) + 1
    matches = 0
    for g, c in cand_counts.items():
        r = ref_counts.get(g, 0)
        matches += c if c < r else r
    return matches, total
