"""Merel's universal Hecke matrices for weight-2 Manin symbols.

For a prime q not dividing the level, T_q acts on Manin symbols by
summing the right actions of the integer matrices

    X_q = { [[a,b],[c,d]] : ad - bc = q, a > b >= 0, d > c >= 0 },

and ad - bc = a(d-c) + c(a-b) >= a bounds the enumeration.  When
gcd(q, N) = 1 every image pair stays primitive mod N, so no terms drop.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def merel_matrices(q):
    """All of X_q as an (k, 2, 2) int64 array, lexicographic order."""
    mats = []
    for a in range(1, q + 1):
        for b in range(a):
            # c < q/(a-b) keeps d > c reachable; d fixed by the determinant
            for c in range(0, -(-q // (a - b))):
                num = q + b * c
                if num % a:
                    continue
                d = num // a
                if d > c:
                    mats.append((a, b, c, d))
    out = np.array(mats, dtype=np.int64).reshape(-1, 2, 2)
    assert (out[:, 0, 0] * out[:, 1, 1] - out[:, 0, 1] * out[:, 1, 0] == q).all()
    return out
