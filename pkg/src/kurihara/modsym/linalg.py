"""Dense and sparse linear algebra over word-size prime fields.

Primes are kept below 2^15 so residue products fit in 30 bits and a
float64 matmul with inner dimension up to 128 panels (or 2^23 generally)
is exact; elimination then runs at BLAS speed with reductions only
between block updates.  Exactness over Q is recovered afterwards by CRT
plus rational reconstruction, never trusted blindly: callers re-verify
reconstructed data with integer arithmetic.
"""

import heapq
from fractions import Fraction

import numpy as np

from ..arith import crt_pair, is_prime, rational_reconstruct

# fixed deterministic moduli; 15-bit so float64 block products stay exact
PRIMES_15BIT = tuple(p for p in range(32749, 16384, -2) if is_prime(p))[:64]

_PANEL = 128


def matmul_mod(A, B, p):
    """Exact A @ B mod p for reduced int64 matrices."""
    assert A.shape[1] < (1 << 53) // (p * p)
    return (A.astype(np.float64) @ B.astype(np.float64)).astype(np.int64) % p


def rref_mod(A, p):
    """In-place reduced row echelon form of int64 matrix A mod p.

    Returns the list of pivot columns.  Columns are processed in panels:
    scalar row operations settle the panel itself, then the trailing
    columns absorb all of the panel's pivots through two exact float64
    matmuls (new pivot-row tails U^{-1} T1, remaining rows T2 - V T1').
    """
    A %= p
    n_rows, n_cols = A.shape
    pivots = []
    row = 0
    col = 0
    while row < n_rows and col < n_cols:
        pe = min(col + _PANEL, n_cols)
        panel = A[:, col:pe]
        orig = panel.copy()
        r0 = row
        local_piv = []
        for c in range(pe - col):
            nz = np.nonzero(panel[row:, c])[0]
            if len(nz) == 0:
                continue
            r = row + nz[0]
            if r != row:
                A[[row, r]] = A[[r, row]]
                orig[[row, r]] = orig[[r, row]]
            inv = pow(int(panel[row, c]), -1, p)
            panel[row] = panel[row] * inv % p
            rest = np.nonzero(panel[:, c])[0]
            rest = rest[rest != row]
            if len(rest):
                panel[rest] = (panel[rest] - np.outer(panel[rest, c], panel[row])) % p
            pivots.append(col + c)
            local_piv.append(c)
            row += 1
            if row == n_rows:
                break
        r = row - r0
        if r and pe < n_cols:
            piv_rows = np.arange(r0, row)
            others = np.concatenate([np.arange(0, r0), np.arange(row, n_rows)])
            U = orig[np.ix_(piv_rows, local_piv)]
            # invert the pivot block by scalar elimination on [U | I]
            aug = np.concatenate([U % p, np.eye(r, dtype=np.int64)], axis=1)
            for i in range(r):
                nz = np.nonzero(aug[i:, i])[0]
                j = i + nz[0]
                if j != i:
                    aug[[i, j]] = aug[[j, i]]
                aug[i] = aug[i] * pow(int(aug[i, i]), -1, p) % p
                rest = np.nonzero(aug[:, i])[0]
                rest = rest[rest != i]
                if len(rest):
                    aug[rest] = (aug[rest] - np.outer(aug[rest, i], aug[i])) % p
            Uinv = aug[:, r:]
            V = orig[np.ix_(others, local_piv)] % p if len(others) else None
            # chunk the trailing columns to bound temporaries
            for t0 in range(pe, n_cols, 4096):
                ts = slice(t0, min(t0 + 4096, n_cols))
                T1 = matmul_mod(Uinv, A[piv_rows, ts], p)
                A[piv_rows, ts] = T1
                if V is not None:
                    A[others, ts] = (A[others, ts] - matmul_mod(V, T1, p)) % p
        col = pe
    return pivots


def kernel_mod(A, p):
    """Basis of the right kernel of A mod p, returned as columns."""
    B = A.copy() % p
    pivots = rref_mod(B, p)
    n_cols = A.shape[1]
    pivot_set = set(pivots)
    free = [c for c in range(n_cols) if c not in pivot_set]
    K = np.zeros((n_cols, len(free)), dtype=np.int64)
    for j, c in enumerate(free):
        K[c, j] = 1
        for i, pc in enumerate(pivots):
            K[pc, j] = (-B[i, c]) % p
    return K


class SparseCollapse:
    """Eliminate a sparse homogeneous system, expressing dependent
    variables through the surviving free ones.

    Rows are dicts {var: coeff mod p}.  Pivots prefer short rows and
    rarely-used variables (Markowitz-style) to contain fill-in.  After
    elimination, back-substitution rewrites every eliminated variable as
    a combination of free variables only.
    """

    def __init__(self, n_vars, rows, p):
        self.n = n_vars
        self.p = p
        self.rows = []
        for r in rows:
            acc = {}
            for v, c in r:
                acc[v] = (acc.get(v, 0) + c) % p
            self.rows.append({v: c for v, c in acc.items() if c})

    def run(self):
        p = self.p
        occurs = [set() for _ in range(self.n)]
        for i, r in enumerate(self.rows):
            for v in r:
                occurs[v].add(i)
        heap = [(len(r), i) for i, r in enumerate(self.rows) if r]
        heapq.heapify(heap)
        eliminated = {}
        order = []
        while heap:
            w, i = heapq.heappop(heap)
            row = self.rows[i]
            if not row:
                continue
            if len(row) != w:
                heapq.heappush(heap, (len(row), i))
                continue
            var = min(row, key=lambda v: (len(occurs[v]), v))
            inv = pow(row[var], -1, p)
            expr = {v: (-c * inv) % p for v, c in row.items() if v != var}
            eliminated[var] = expr
            order.append(var)
            self.rows[i] = {}
            for v in row:
                occurs[v].discard(i)
            for j in list(occurs[var]):
                other = self.rows[j]
                coef = other.pop(var, 0)
                occurs[var].discard(j)
                if not coef:
                    continue
                for v, c in expr.items():
                    nv = (other.get(v, 0) + coef * c) % p
                    if nv:
                        if v not in other:
                            occurs[v].add(j)
                        other[v] = nv
                    elif v in other:
                        del other[v]
                        occurs[v].discard(j)
                if other:
                    heapq.heappush(heap, (len(other), j))
        # resolve transitively; the last-eliminated variable already has a
        # free-only expression, so reverse order needs a single pass
        free = sorted(set(range(self.n)) - set(eliminated))
        resolved = {}
        free_set = set(free)
        for var in reversed(order):
            acc = {}
            for v, c in eliminated[var].items():
                if v in free_set:
                    acc[v] = (acc.get(v, 0) + c) % p
                else:
                    for w2, cw in resolved[v].items():
                        acc[w2] = (acc.get(w2, 0) + c * cw) % p
            resolved[var] = {v: c for v, c in acc.items() if c}
        return free, resolved


def crt_reconstruct_vector(residue_vectors, primes, num_bound, den_bound):
    """CRT mod-p vectors and reconstruct entrywise rationals.

    Returns a list of Fractions, or None if any entry fails (caller then
    adds more primes).
    """
    n = len(residue_vectors[0])
    out = []
    for i in range(n):
        r, m = int(residue_vectors[0][i]), primes[0]
        for vec, q in zip(residue_vectors[1:], primes[1:]):
            r, m = crt_pair(r, m, int(vec[i]), q)
        if 2 * num_bound * den_bound >= m:
            return None
        val = rational_reconstruct(r, m, num_bound, den_bound)
        if val is None:
            return None
        out.append(val)
    return out
