"""The projective line P^1(Z/N) with a divisor-keyed perfect index.

A pair (c:d), gcd(c,d,N) = 1, is classified up to unit scaling by the
invariant (g, d*(c/g)^{-1} mod N/g) with g = gcd(c,N): two pairs with the
same g are proportional iff those residues agree mod N/g, and every
residue coprime to the wild part gcd(g, N/g) occurs.  Keying classes this
way needs sum_{g|N} N/g = sigma(N) table slots, which stays linear-ish in
N and keeps lookups vectorizable; the usual dense (c,d) table would need
N^2 entries and is hopeless at the levels the twist descent requires.
"""

import numpy as np

from ..arith import divisors, factorize


class P1Index:
    """Canonical enumeration of P^1(Z/N) plus O(1) vectorized lookup."""

    def __init__(self, N):
        if N < 1:
            raise ValueError("level must be positive")
        self.N = N
        self.divisors = divisors(N)
        self._primes = [q for q, _ in factorize(N)] if N > 1 else []

        # inverse table mod M = N/g for every divisor g, zero at non-units
        self._inv = {}
        for g in self.divisors:
            M = N // g
            inv = np.zeros(M, dtype=np.int64)
            for x in range(M):
                if np.gcd(x, M) == 1:
                    inv[x] = pow(x, -1, M) if M > 1 else 0
            self._inv[g] = inv

        self._offset = {}
        total = 0
        for g in self.divisors:
            self._offset[g] = total
            total += N // g
        self._keyspace = total

        key_to_index = np.full(total, -1, dtype=np.int64)
        c_rep = []
        d_rep = []
        idx = 0
        for g in self.divisors:
            M = N // g
            wild = [q for q in self._primes if g % q == 0 and M % q == 0]
            dp = np.arange(M, dtype=np.int64) if M > 1 else np.zeros(1, dtype=np.int64)
            valid = np.ones(len(dp), dtype=bool)
            for q in wild:
                valid &= dp % q != 0
            dvals = dp[valid]
            # lift d' mod M to a representative coprime to g itself
            lift = dvals.copy()
            for _ in range(64):
                bad = np.gcd(lift, g) != 1
                if not bad.any():
                    break
                lift[bad] += M
            else:
                raise AssertionError("representative lift did not terminate")
            key_to_index[self._offset[g] + dvals] = idx + np.arange(len(dvals))
            c_rep.append(np.full(len(dvals), g, dtype=np.int64))
            d_rep.append(lift)
            idx += len(dvals)

        self.size = idx
        self.c_rep = np.concatenate(c_rep)
        self.d_rep = np.concatenate(d_rep)
        self._key_to_index = key_to_index

        expected = N
        for q in self._primes:
            expected = expected // q * (q + 1)
        assert self.size == expected, "P^1 count disagrees with N*prod(1+1/q)"

    def index_of(self, c, d):
        """Indices of classes (c:d); inputs any integers, taken mod N.

        Pairs with gcd(c,d,N) > 1 map to -1.
        """
        N = self.N
        c = np.atleast_1d(np.asarray(c, dtype=np.int64)) % N
        d = np.atleast_1d(np.asarray(d, dtype=np.int64)) % N
        out = np.full(c.shape, -1, dtype=np.int64)
        g_all = np.gcd(c, N)
        for g in self.divisors:
            mask = g_all == g
            if not mask.any():
                continue
            M = N // g
            if M == 1:
                key = self._offset[g]
                ok = np.gcd(d[mask], N) == 1
                vals = np.where(ok, self._key_to_index[key], -1)
                out[mask] = vals
                continue
            t0 = self._inv[g][(c[mask] // g) % M]
            key = self._offset[g] + (d[mask] % M) * t0 % M
            out[mask] = self._key_to_index[key]
        return out

    def index_of_pair(self, c, d):
        """Scalar lookup; raises on invalid pairs."""
        i = int(self.index_of(np.int64(c), np.int64(d))[0])
        if i < 0:
            raise ValueError(f"({c}:{d}) is not a point of P^1(Z/{self.N})")
        return i

    # right actions of the standard generators on column classes (c:d)

    def perm_S(self):
        """x -> xS with S = [[0,-1],[1,0]]: (c:d) -> (d:-c)."""
        return self.index_of(self.d_rep, -self.c_rep)

    def perm_T(self):
        """x -> xT with T = [[0,-1],[1,-1]] of order 3: (c:d) -> (d:-c-d)."""
        return self.index_of(self.d_rep, -self.c_rep - self.d_rep)

    def perm_eta(self):
        """x -> x*eta with eta = [[-1,0],[0,1]]: (c:d) -> (-c:d)."""
        return self.index_of(-self.c_rep, self.d_rep)
