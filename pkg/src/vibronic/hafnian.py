"""Exact loop hafnians for small symmetric matrices.

The recursion pairs the lowest remaining vertex either with itself (a loop,
weighted by the diagonal) or with another vertex, memoised over vertex
bitmasks.  Cost is O(n 2^n), which is fine up to n of about 20.
"""

import numpy as np


def loop_hafnian(A, loops=None):
    """Loop hafnian of symmetric ``A``; ``loops`` overrides the diagonal weights."""
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("loop_hafnian needs a square matrix")
    weights = np.diag(A) if loops is None else np.asarray(loops)
    a = A.astype(complex).tolist()
    w = [complex(x) for x in weights]
    cache = {0: 1.0 + 0.0j}

    def rec(mask):
        hit = cache.get(mask)
        if hit is not None:
            return hit
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        row = a[i]
        total = w[i] * rec(rest)
        others = rest
        while others:
            low = others & -others
            total += row[low.bit_length() - 1] * rec(rest & ~low)
            others ^= low
        cache[mask] = total
        return total

    value = rec((1 << n) - 1)
    return value if np.iscomplexobj(A) or np.iscomplexobj(weights) else value.real


def hafnian(A):
    """Hafnian (perfect matchings only)."""
    A = np.asarray(A)
    return loop_hafnian(A, np.zeros(A.shape[0]))


def reduction(A, pattern):
    """Repeat row/column ``i`` of ``A`` ``pattern[i]`` times."""
    idx = np.repeat(np.arange(len(pattern)), pattern)
    A = np.asarray(A)
    if A.ndim == 1:
        return A[idx]
    return A[np.ix_(idx, idx)]
