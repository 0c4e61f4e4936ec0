"""Exact evaluation of the dual Hecke eigensymbol at rational cusps.

The integer class-value vector certified in space.py is expanded to a
per-P^1 table w; the path {oo -> u/v} unwinds through the continued
fraction of u/v, each convergent pair contributing w at the class
(q_k : q_{k-1}) or (q_k : -q_{k-1}) according to the determinant sign,
so every evaluation is a short exact integer sum.  Two normalizations
ride on top of the raw table: a p-unit rescaling that puts the minimal
p-valuation over small-denominator probes at zero, and an absolute pin
against L(E,1)/Omega (or a positive-discriminant twisted moment when
L vanishes).  A symbol for a curve whose own level is out of native
reach is synthesized from a quadratic twist partner: unfolding a
primitive real character chi_D gives

    sum_{u mod |D|} chi_D(u) * path_f(r + u/|D|) = tau(chi_D) * path_{f twisted}(r),

an identity of q-expansions that needs no reduction hypotheses beyond
the twisted form being the partner's naive twist; the Gauss-sum factor
is absorbed into the normalization stages.
"""

from fractions import Fraction
from math import gcd

import mpmath
import numpy as np

from ..arith import is_fundamental_discriminant, is_prime, kronecker_symbol, v_p
from ..curve import l_value_numeric, real_period, twisted_l_value_numeric
from .space import _signed_merge, build_space, extract_eigenline


def _expand_table(class_p1, sign_p1, values):
    cls = np.asarray(class_p1)
    return np.where(cls >= 0, values[np.clip(cls, 0, None)] * sign_p1, 0)


def _paths_vectorized(p1, table, numers, den):
    """Path values {oo -> numers[i]/den} for every lane, as int64."""
    numers = np.asarray(numers, dtype=np.int64)
    n = len(numers)
    total = np.zeros(n, dtype=np.int64)
    uu = numers.copy()
    vv = np.full(n, den, dtype=np.int64)
    qm2 = np.ones(n, dtype=np.int64)
    qm1 = np.zeros(n, dtype=np.int64)
    owner = np.arange(n, dtype=np.int64)
    k = 0
    while len(uu):
        c = uu // vv
        uu, vv = vv, uu - c * vv
        qk = c * qm1 + qm2
        eps = 1 if (k & 1) else -1
        idx = p1.index_of(qk, eps * qm1)
        assert (idx >= 0).all(), "path lookup left P^1; convergents not coprime?"
        total[owner] += table[idx]
        qm2, qm1 = qm1, qk
        k += 1
        alive = vv > 0
        if not alive.all():
            uu, vv = uu[alive], vv[alive]
            qm2, qm1, owner = qm2[alive], qm1[alive], owner[alive]
    return total


class EigenSymbol:
    """Dual eigensymbol of a rational newform on one sign quotient,
    evaluated by exact integer continued-fraction walks."""

    def __init__(self, N, sign, p, p1, class_p1, sign_p1, class_rep, class_values):
        self.N = N
        self.sign = sign
        self.p = p
        self.p1 = p1
        self.class_p1 = class_p1
        self.sign_p1 = sign_p1
        self.class_rep = class_rep
        self.class_values = np.asarray(class_values, dtype=np.int64)
        self.table = _expand_table(class_p1, sign_p1, self.class_values)
        # path sums accumulate ~30 table entries per lane and twists add
        # another small factor; this bound keeps everything inside int64
        assert np.abs(self.table).max(initial=0) < 2**40
        self.verified_hecke = []
        self.fricke_eps = 0
        self.lambda_p = None
        self.lambda_pinned = None
        self.pin_note = "not attempted"
        self.ainvs = None

    @classmethod
    def from_space(cls, space, values):
        return cls(
            space.N,
            space.sign,
            0,
            space.p1,
            space.class_p1,
            space.sign_p1,
            space.class_rep,
            values,
        )

    @classmethod
    def from_class_values(cls, N, sign, p, class_values):
        """Rebuild the evaluator from exported class values: the P^1
        index and the S/eta merge are deterministic, so only the values
        need shipping."""
        from .p1 import P1Index

        p1 = P1Index(N)
        class_p1, sign_p1, class_rep = _signed_merge(p1, sign)
        if len(class_rep) != len(class_values):
            raise ValueError(
                f"class count mismatch: level {N} sign {sign} has "
                f"{len(class_rep)} classes, file carries {len(class_values)}"
            )
        return cls(N, sign, p, p1, class_p1, sign_p1, class_rep, class_values)

    def path_value(self, u, v):
        """Exact integer value of the path {oo -> u/v}, v > 0."""
        assert v > 0
        total = 0
        qm2, qm1 = 1, 0
        k = 0
        while v:
            c = u // v
            u, v = v, u - c * v
            qk = c * qm1 + qm2
            eps = 1 if (k & 1) else -1
            total += int(self.table[self.p1.index_of_pair(qk, eps * qm1)])
            qm2, qm1 = qm1, qk
            k += 1
        return total

    def path_values(self, numers, den):
        return _paths_vectorized(self.p1, self.table, numers, den)

    def lambda_best(self):
        if self.lambda_pinned is not None:
            return self.lambda_pinned
        if self.lambda_p is not None:
            return self.lambda_p
        return Fraction(1)

    def evaluate(self, u, v):
        """Normalized symbol value at u/v as an exact rational."""
        return self.lambda_best() * self.path_value(u, v)


class TwistedEigenSymbol:
    """Symbol of a curve synthesized from a quadratic twist partner by
    character unfolding; shares the evaluator interface."""

    def __init__(self, partner, D, N, p):
        if not is_fundamental_discriminant(D):
            raise ValueError(f"{D} is not a fundamental discriminant")
        want = +1 if D > 0 else -1
        if partner.sign != want:
            raise ValueError(
                f"partner symbol has sign {partner.sign}; twisting by {D} "
                f"needs the {want} quotient to land on the plus symbols"
            )
        self.partner = partner
        self.D = D
        self.N = N
        self.sign = +1
        self.p = p
        m = abs(D)
        self._chi = [(t, kronecker_symbol(D, t)) for t in range(m)]
        self._chi = [(t, c) for t, c in self._chi if c]
        self.verified_hecke = []
        self.fricke_eps = 0
        self.lambda_p = None
        self.lambda_pinned = None
        self.pin_note = "not attempted"
        self.ainvs = None

    def path_value(self, u, v):
        m = abs(self.D)
        total = 0
        for t, c in self._chi:
            total += c * self.partner.path_value(u * m + t * v, v * m)
        return total

    def path_values(self, numers, den):
        m = abs(self.D)
        numers = np.asarray(numers, dtype=np.int64)
        total = np.zeros(len(numers), dtype=np.int64)
        for t, c in self._chi:
            total += c * self.partner.path_values(numers * m + t * den, den * m)
        return total

    def lambda_best(self):
        if self.lambda_pinned is not None:
            return self.lambda_pinned
        if self.lambda_p is not None:
            return self.lambda_p
        return Fraction(1)

    def evaluate(self, u, v):
        return self.lambda_best() * self.path_value(u, v)


# ---------------------------------------------------------------------------
# value-side certifications


def fricke_sign(sym, min_agreeing=5):
    """Root number w(E) = -eps from the involution z -> -1/(Nz) acting on
    paths: eps * path(r) = path(-1/(Nr)) - path(0).  Demands unanimity
    over several sample cusps."""
    N = sym.N
    path0 = sym.path_value(0, 1)
    seen = []
    m = 1
    while len(seen) < min_agreeing:
        m += 1
        if N % m == 0:
            continue
        for a in range(1, m):
            pr = sym.path_value(a, m)
            if pr == 0:
                continue
            num = sym.path_value(-m, N * a) - path0
            if num % pr:
                raise ArithmeticError("involution did not act by a scalar")
            eps = num // pr
            if eps not in (1, -1):
                raise ArithmeticError(f"involution scalar {eps} is not a sign")
            seen.append(eps)
            if len(seen) >= min_agreeing:
                break
        if m > 200:
            raise ArithmeticError("no usable sample cusps for the involution")
    if len(set(seen)) != 1:
        raise ArithmeticError(f"involution sign not unanimous: {seen}")
    eps = seen[0]
    sym.fricke_eps = eps
    return -eps


def hecke_value_check(sym, q, a_q, samples=None):
    """Exact identity a_q*V(r) = V(qr) + sum_j V((r+j)/q) on raw paths,
    for a prime q coprime to the level.  This certifies imported or
    synthesized evaluators without rebuilding any linear algebra."""
    if sym.N % q == 0:
        raise ValueError("recurrence check needs a prime away from the level")
    if samples is None:
        samples = [(0, 1), (1, 5), (2, 5), (1, 7), (3, 7), (2, 9), (1, 11), (4, 13)]
    for a, m in samples:
        lhs = a_q * sym.path_value(a, m)
        rhs = sym.path_value(q * a, m)
        for j in range(q):
            rhs += sym.path_value(a + j * m, q * m)
        if lhs != rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# normalization


def _probe_values(sym, bound, extra_dens=()):
    out = [sym.path_value(0, 1)]
    for m in range(2, bound + 1):
        for a in range(1, m):
            if gcd(a, m) == 1:
                out.append(sym.path_value(a, m))
    for m in extra_dens:
        if m <= bound:
            continue
        a = np.arange(1, m, dtype=np.int64)
        a = a[np.gcd(a, m) == 1]
        out.extend(int(v) for v in sym.path_values(a, m))
    return out


def normalize_unit_scale(sym, ell_min=None):
    """First stage: rescale so the minimal p-valuation over probe cusps
    a/m (m up to 20, plus the smallest admissible prime when that is
    larger) is exactly zero."""
    p = sym.p
    assert p > 1
    extra = (ell_min,) if ell_min else ()
    bound = 20
    while True:
        vals = [v for v in _probe_values(sym, bound, extra) if v]
        if vals:
            break
        bound *= 2
        if bound > 320:
            raise ArithmeticError("eigensymbol vanished on every probe cusp")
    vmin = min(v_p(v, p) for v in vals)
    sym.lambda_p = Fraction(1, p**vmin)
    return sym.lambda_p


def _mpf_to_fraction(x):
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return Fraction(0)
    val = Fraction(man) * Fraction(2) ** exp
    return -val if sign else val


def _pin_ratio(numeric_fn, divisor, den_bound, bits_pair=(96, 160)):
    """Rational lambda with lambda*divisor = numeric, reconstructed at
    two precisions that must agree exactly."""
    cands = []
    for bits in bits_pair:
        with mpmath.workprec(bits):
            x = numeric_fn(bits)
            frac = _mpf_to_fraction(x) / divisor
        cands.append(frac.limit_denominator(den_bound))
    if cands[0] != cands[1] or cands[0] == 0:
        return None
    return cands[0]


def normalize_pinned(sym, ctx, aux_disc_bound=100, precision_bits=96):
    """Second stage: absolute scale.  When L(E,1) != 0 the path at 0 is
    pinned to L/Omega directly; otherwise (plus quotient only) a
    positive fundamental discriminant d with a nonvanishing twisted
    moment pins through sqrt(d) L(E, chi_d, 1)/Omega.  Failure leaves
    the symbol unit-ambiguous rather than wrongly scaled."""
    if sym.sign == -1:
        sym.pin_note = "minus quotient carries no real-period pin"
        return None
    if ctx.root_number == 0:
        raise ValueError("root number must be settled before pinning")
    bits_pair = (precision_bits, precision_bits + 64)
    path0 = sym.path_value(0, 1)
    l_nonzero = False
    if ctx.root_number == +1:
        with mpmath.workprec(precision_bits):
            ratio = l_value_numeric(ctx, precision_bits) / real_period(
                ctx.model, precision_bits)
            l_nonzero = abs(ratio) > mpmath.mpf(2) ** (-30)
    if l_nonzero:
        if path0 == 0:
            sym.pin_note = "L(E,1) != 0 but the path at 0 vanished"
            return None
        lam = _pin_ratio(
            lambda bits: l_value_numeric(ctx, bits) / real_period(ctx.model, bits),
            path0,
            max(10**8, 10**4 * abs(path0)),
            bits_pair,
        )
        if lam is None:
            sym.pin_note = "precision ladder disagreed on the L/Omega ratio"
            return None
        sym.lambda_pinned = lam
        sym.pin_note = ""
        return lam
    # vanishing L(E,1): pin through an even twisted moment instead
    for d in range(2, aux_disc_bound):
        if not is_fundamental_discriminant(d) or gcd(d, sym.N) != 1:
            continue
        us = np.arange(1, d, dtype=np.int64)
        chis = np.array([kronecker_symbol(d, int(u)) for u in us], dtype=np.int64)
        keep = chis != 0
        moment = int(np.dot(chis[keep], sym.path_values(us[keep], d)))
        if moment == 0:
            continue

        def numeric(bits, dd=d):
            lv = twisted_l_value_numeric(ctx, dd, bits)
            if abs(lv) < mpmath.mpf(2) ** (-bits // 2):
                return mpmath.mpf(0)
            return mpmath.sqrt(dd) * lv / real_period(ctx.model, bits)

        with mpmath.workprec(precision_bits):
            if numeric(precision_bits) == 0:
                continue
        lam = _pin_ratio(numeric, moment, max(10**8, 10**4 * abs(moment)),
                         bits_pair)
        if lam is None:
            continue
        sym.lambda_pinned = lam
        sym.pin_note = ""
        return lam
    sym.pin_note = "no auxiliary discriminant produced a usable pin"
    return None


# ---------------------------------------------------------------------------
# construction entry points


def _certify_value_recurrences(sym, ap_of, seed=(), want=4):
    """Run the T_q value recurrence for several good primes and record
    the certified (q, a_q) pairs on the symbol."""
    qs = [q for q in dict.fromkeys(seed) if sym.N % q != 0]
    q = 1
    while len(qs) < want:
        q = _next_prime_coprime(q, sym.N)
        if q not in qs:
            qs.append(q)
    pairs = []
    for q in sorted(qs):
        a_q = ap_of(q)
        if not hecke_value_check(sym, q, a_q):
            raise ArithmeticError(f"symbol failed the T_{q} value recurrence")
        pairs.append((q, a_q))
    sym.verified_hecke = pairs
    return pairs


def eigensymbol_for(ctx, sign=+1, ell_min=None, precision_bits=96):
    """Build the curve's eigensymbol natively at its conductor: space,
    eigenline, involution sign, then both normalization stages."""
    space = build_space(ctx.conductor, sign)
    values, used_qs = extract_eigenline(space, ctx.ap)
    sym = EigenSymbol.from_space(space, values)
    sym.p = ctx.p
    sym.ainvs = list(ctx.model.ainvs)
    _certify_value_recurrences(sym, ctx.ap, seed=used_qs)
    w = fricke_sign(sym)
    if ctx.root_number == 0:
        ctx.root_number = w
    elif ctx.root_number != w:
        raise ArithmeticError(
            f"functional equation sign {w} contradicts the recorded "
            f"root number {ctx.root_number}"
        )
    normalize_unit_scale(sym, ell_min)
    normalize_pinned(sym, ctx, precision_bits=precision_bits)
    return sym


def twisted_eigensymbol(ctx, partner_sym, D, ell_min=None, precision_bits=96):
    """Synthesize the curve's plus symbol from a partner symbol and a
    fundamental discriminant; certifies coefficient compatibility and
    Hecke recurrences before normalizing."""
    sym = TwistedEigenSymbol(partner_sym, D, ctx.conductor, ctx.p)
    sym.ainvs = list(ctx.model.ainvs)
    for q in (2, 3, 5, 7, 11, 13):
        if ctx.conductor % q == 0:
            continue
        chi = kronecker_symbol(D, q)
        if chi == 0 or sym.partner.N % q == 0:
            continue
        if ctx.ap(q) != chi * ap_good_partner(sym.partner, q):
            raise ArithmeticError(
                f"a_{q} does not match the twisted partner coefficient"
            )
    _certify_value_recurrences(sym, ctx.ap)
    w = fricke_sign(sym)
    if ctx.root_number == 0:
        ctx.root_number = w
    elif ctx.root_number != w:
        raise ArithmeticError(
            f"functional equation sign {w} contradicts the recorded "
            f"root number {ctx.root_number}"
        )
    normalize_unit_scale(sym, ell_min)
    normalize_pinned(sym, ctx, precision_bits=precision_bits)
    return sym


def ap_good_partner(partner_sym, q):
    """Partner eigenvalue at a good prime, read off the symbol itself via
    the value recurrence on a nonvanishing sample path."""
    for a, m in ((0, 1), (1, 5), (2, 5), (1, 7), (2, 7), (1, 9), (1, 11)):
        if m % q == 0 or partner_sym.N % m == 0:
            continue
        base = partner_sym.path_value(a, m)
        if base == 0:
            continue
        total = partner_sym.path_value(q * a, m)
        for j in range(q):
            total += partner_sym.path_value(a + j * m, q * m)
        if total % base:
            raise ArithmeticError("partner paths do not satisfy a recurrence")
        return total // base
    raise ArithmeticError("no usable sample path to read the eigenvalue")


def _next_prime_coprime(q, n):
    q += 1
    while not is_prime(q) or n % q == 0:
        q += 1
    return q
