# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled text-comparison kernels; mirror of _kernels_py."""

from libc.stdlib cimport malloc, free

BACKEND = "compiled"


def lcs_length(a, b):
    """Length of the longest common subsequence of two id sequences."""
    cdef Py_ssize_t na = len(a), nb = len(b)
    if na == 0 or nb == 0:
        return 0
    if nb > na:
        a, b = b, a
        na, nb = nb, na
    cdef long *aa = <long *> malloc(na * sizeof(long))
    cdef long *bb = <long *> malloc(nb * sizeof(long))
    cdef long *prev = <long *> malloc((nb + 1) * sizeof(long))
    cdef long *cur = <long *> malloc((nb + 1) * sizeof(long))
    if aa == NULL or bb == NULL or prev == NULL or cur == NULL:
        free(aa); free(bb); free(prev); free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef long x, pj, cj, result
    try:
        for i in range(na):
            aa[i] = a[i]
        for j in range(nb):
            bb[j] = b[j]
        for j in range(nb + 1):
            prev[j] = 0
        for i in range(na):
            x = aa[i]
            cur[0] = 0
            for j in range(1, nb + 1):
                if x == bb[j - 1]:
                    cur[j] = prev[j - 1] + 1
                else:
                    pj = prev[j]
                    cj = cur[j - 1]
                    cur[j] = pj if pj >= cj else cj
            prev, cur = cur, prev
        result = prev[nb]
    finally:
        free(aa); free(bb); free(prev); free(cur)
    return result


def clipped_ngram_matches(a, b, int n):
    """(clipped matches, candidate n-gram count) for order-n n-grams."""
    cdef Py_ssize_t na = len(a), nb = len(b)
    if na < n:
        return 0, 0
    ref_counts = {}
    cdef Py_ssize_t i
    for i in range(nb - n + 1):
        g = tuple(b[i:i + n])
        ref_counts[g] = ref_counts.get(g, 0) + 1
    cand_counts = {}
    cdef Py_ssize_t total = na - n + 1
    for i in range(total):
        g = tuple(a[i:i + n])
        cand_counts[g] = cand_counts.get(g, 0) + 1
    cdef long matches = 0
    cdef long c, r
    for g, cobj in cand_counts.items():
        c = cobj
        r = ref_counts.get(g, 0)
        matches += c if c < r else r
    return matches, total
