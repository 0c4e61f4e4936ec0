"""Sieving the auxiliary primes and enumerating squarefree moduli.

A prime ell qualifies at depth k when it is coprime to Np, splits
completely in the p^k-cyclotomic sense (ell = 1 mod p^k), and the
Frobenius trace collapses (a_ell = ell + 1 mod p^k).  The depth
actually attained,

    k_ell = min(v_p(ell - 1), v_p(a_ell - ell - 1)),

is recorded per prime so that one sieve pass at k = 1 serves every
larger k.  Moduli are squarefree products of sieved primes, enumerated
in colexicographic order by prime index: extending the prime pool then
never reorders earlier output, so interrupted scans resume stably.
"""

from dataclasses import dataclass

from .arith import INF, build_log_table, factorize, is_prime, primitive_root, v_p


@dataclass(frozen=True)
class KolyvaginPrime:
    """One sieved prime with its depth and discrete-log generator."""

    ell: int
    a_ell: int
    k_ell: int
    eta: int

    def log_table(self):
        return build_log_table(self.ell, self.eta)

    def __repr__(self):
        return f"KolyvaginPrime({self.ell}, k={self.k_ell})"


@dataclass(frozen=True)
class Modulus:
    """Squarefree product of sieved primes; n = 1 is the empty product."""

    primes: tuple = ()

    def __post_init__(self):
        ells = [q.ell for q in self.primes]
        if sorted(set(ells)) != ells:
            raise ValueError("modulus primes must be sorted and distinct")

    @property
    def n(self):
        out = 1
        for q in self.primes:
            out *= q.ell
        return out

    @property
    def nu(self):
        return len(self.primes)

    @property
    def i_valuation(self):
        """v_p(I_n); the empty product means exact work over Z_(p)."""
        if not self.primes:
            return INF
        return min(q.k_ell for q in self.primes)

    def extend(self, prime):
        return Modulus(self.primes + (prime,))

    def __repr__(self):
        if not self.primes:
            return "Modulus(1)"
        return "Modulus(%s)" % "*".join(str(q.ell) for q in self.primes)


def i_valuation(modulus):
    """Valuation of the ideal I_n = sum of (ell - 1, a_ell - ell - 1)."""
    if not modulus.primes:
        raise ValueError("I_1 has no finite valuation; n = 1 works exactly")
    return modulus.i_valuation


def sieve(ctx, p, k, bound):
    """All qualifying primes ell <= bound with k_ell >= k, ascending.

    Only candidates with ell = 1 mod p^k are ever point-counted; the
    congruence filter removes a factor p^k of the work before the
    expensive part starts.
    """
    if p < 5 or not is_prime(p):
        raise ValueError("the sieve needs a prime p >= 5")
    if k < 1:
        raise ValueError("depth k must be at least 1")
    if p != ctx.p:
        raise ValueError(f"context was built for p={ctx.p}, sieve asked for p={p}")
    step = p**k
    out = []
    for ell in range(1 + step, bound + 1, step):
        if not is_prime(ell) or ctx.conductor % ell == 0 or ell == p:
            continue
        a_ell = ctx.ap(ell)
        if (a_ell - ell - 1) % step:
            continue
        k_ell = min(v_p(ell - 1, p), v_p(a_ell - ell - 1, p))
        assert k_ell >= k
        out.append(KolyvaginPrime(ell, a_ell, k_ell, primitive_root(ell)))
    return out


def kolyvagin_prime(ctx, p, ell):
    """One explicitly chosen prime, checked against the same conditions
    the sieve applies."""
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    if ctx.conductor % ell == 0 or ell == p:
        raise ValueError(f"{ell} divides Np and cannot enter a modulus")
    a_ell = ctx.ap(ell)
    k_ell = min(v_p(ell - 1, p), v_p(a_ell - ell - 1, p))
    if k_ell < 1:
        raise ValueError(
            f"{ell} fails the depth-1 congruences "
            f"(ell-1 and a_ell-ell-1 must both vanish mod {p})"
        )
    return KolyvaginPrime(ell, a_ell, k_ell, primitive_root(ell))


def modulus_from_int(ctx, p, n):
    """Factor an explicit squarefree n >= 1 into sieved primes."""
    if n < 1:
        raise ValueError("modulus must be positive")
    primes = []
    for ell, e in factorize(n):
        if e > 1:
            raise ValueError(f"modulus must be squarefree; {ell}^{e} divides {n}")
        primes.append(kolyvagin_prime(ctx, p, ell))
    return Modulus(tuple(primes))


def _colex_tuples(pool_size, nu):
    # index tuples i_1 < ... < i_nu ordered by reversed-tuple comparison
    if nu == 0:
        yield ()
        return
    for top in range(nu - 1, pool_size):
        for rest in _colex_tuples(top, nu - 1):
            yield rest + (top,)


def enumerate_moduli(primes, nu, budget=None):
    """Moduli with exactly nu distinct primes from the pool, in
    colexicographic order by prime index, cut off after `budget`."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    count = 0
    for idxs in _colex_tuples(len(primes), nu):
        if budget is not None and count >= budget:
            return
        yield Modulus(tuple(primes[i] for i in idxs))
        count += 1
