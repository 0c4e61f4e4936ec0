"""Elliptic curves over Q: Weierstrass invariants, point counts a_ell,
Tate's algorithm and conductors, local torsion criteria, numeric periods
and L-values, and a sampling test for surjectivity of the mod-p image.
"""

import math
import random
import struct
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import arith


class SingularModelError(ValueError):
    pass


class NonMinimalModelError(ValueError):
    pass


@dataclass(frozen=True)
class WeierstrassModel:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b2(self):
        return self.a1**2 + 4 * self.a2

    @property
    def b4(self):
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self):
        return self.a3**2 + 4 * self.a6

    @property
    def b8(self):
        a1, a2, a3, a4, a6 = self.ainvs
        return a1**2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3**2 - a4**2

    @property
    def c4(self):
        return self.b2**2 - 24 * self.b4

    @property
    def c6(self):
        return -self.b2**3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2**2 * b8 - 8 * b4**3 - 27 * b6**2 + 9 * b2 * b4 * b6

    @property
    def j_invariant(self):
        return Fraction(self.c4**3, self.discriminant)


def derive_invariants(ainvs):
    """Build a WeierstrassModel from [a1,a2,a3,a4,a6], rejecting Δ = 0.

    >>> derive_invariants([0, 0, 0, 0, 1]).discriminant
    -432
    >>> derive_invariants([0, 0, 1, -1, 0]).discriminant
    37
    """
    m = WeierstrassModel(*(int(a) for a in ainvs))
    if m.discriminant == 0:
        raise SingularModelError(f"singular model {list(ainvs)}")
    # standard consistency relations between the derived quantities
    assert 4 * m.b8 == m.b2 * m.b6 - m.b4**2
    assert m.c4**3 - m.c6**2 == 1728 * m.discriminant
    return m


def transform(model, u, r, s, t):
    """Apply the change of variables x = u²x' + r, y = u³y' + su²x' + t.

    Raises on non-integral output, which the callers rely on: dividing by
    u = q is exactly the minimality step of Tate's algorithm.
    """
    a1, a2, a3, a4, a6 = model.ainvs
    na1 = Fraction(a1 + 2 * s, u)
    na2 = Fraction(a2 - s * a1 + 3 * r - s * s, u**2)
    na3 = Fraction(a3 + r * a1 + 2 * t, u**3)
    na4 = Fraction(a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t, u**4)
    na6 = Fraction(a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1, u**6)
    out = (na1, na2, na3, na4, na6)
    if any(v.denominator != 1 for v in out):
        raise ValueError(f"transform (u,r,s,t)=({u},{r},{s},{t}) is not integral here")
    return WeierstrassModel(*(int(v) for v in out))


# ---------------------------------------------------------------------------
# Tate's algorithm


@dataclass(frozen=True)
class LocalData:
    prime: int
    kodaira: str
    tamagawa: int
    v_disc: int
    conductor_exponent: int
    reduction: str  # good | split | nonsplit | additive
    u_exponent: int = 0  # q-power scaling removed to reach the minimal model


# number of components of the special fiber, for Ogg's formula
_COMPONENTS = {"I0": 1, "II": 1, "III": 2, "IV": 3, "I0*": 5, "IV*": 7, "III*": 8, "II*": 9}


def _vq(n, q):
    if n == 0:
        return arith.INF
    v = 0
    while n % q == 0:
        n //= q
        v += 1
    return v


def _quad_distinct(a, b, c, q):
    # aX² + bX + c with a a unit mod q: does it have distinct roots mod q?
    if q == 2:
        return b % 2 == 1
    return (b * b - 4 * a * c) % q != 0


def _quad_splits(a, b, c, q):
    # distinct roots assumed; are they in F_q?
    if q == 2:
        return c % 2 == 0  # X² + X + c/a with a odd: root iff c even
    return arith.is_square_mod(b * b - 4 * a * c, q)


def _quad_double_root(a, b, c, q):
    if q == 2:
        return c % 2  # root of X² + c (b even)
    return -b * pow(2 * a, -1, q) % q


def _poly_mulmod(f, g, mod_poly, q):
    # multiply polynomials (low-degree-first coefficient lists) modulo a
    # monic cubic over F_q
    out = [0] * (len(f) + len(g) - 1)
    for i, fi in enumerate(f):
        if fi:
            for j, gj in enumerate(g):
                out[i + j] = (out[i + j] + fi * gj) % q
    # reduce by T³ = -(c2 T² + c4 T + c6)
    c2, c4, c6 = mod_poly
    for d in range(len(out) - 1, 2, -1):
        coef = out[d]
        if coef:
            out[d] = 0
            out[d - 1] = (out[d - 1] - coef * c2) % q
            out[d - 2] = (out[d - 2] - coef * c4) % q
            out[d - 3] = (out[d - 3] - coef * c6) % q
    out = out[:3] + [0] * max(0, 3 - len(out))
    return out[:3]


def _cubic_root_count(c2, c4, c6, q):
    # number of distinct roots in F_q of the squarefree T³ + c2T² + c4T + c6
    if q < 60:
        return sum(1 for t in range(q) if (t**3 + c2 * t * t + c4 * t + c6) % q == 0)
    # deg gcd(T^q - T, P) by computing T^q mod P with square-and-multiply
    mod_poly = (c2 % q, c4 % q, c6 % q)
    result = [1, 0, 0]
    base = [0, 1, 0]
    e = q
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod_poly, q)
        base = _poly_mulmod(base, base, mod_poly, q)
        e >>= 1
    # gcd(P, T^q - T): subtract T, then Euclid on degree <= 2 polys
    r = [result[0], (result[1] - 1) % q, result[2]]
    f = [mod_poly[2], mod_poly[1], mod_poly[0], 1]
    g = [x % q for x in r]
    while any(g):
        while len(g) > 1 and g[-1] == 0:
            g.pop()
        if len(f) < len(g):
            f, g = g, f
            continue
        lead = pow(g[-1], -1, q)
        shift = len(f) - len(g)
        factor = f[-1] * lead % q
        nf = f[:]
        for i, gi in enumerate(g):
            nf[i + shift] = (nf[i + shift] - factor * gi) % q
        nf.pop()
        while len(nf) > 1 and nf[-1] == 0:
            nf.pop()
        f = nf
        if len(f) < len(g):
            f, g = g, f
    return len(f) - 1 if any(f) else 3


def _cubic_multiple_root(c2, c4, c6, q):
    """Root structure of T³ + c2T² + c4T + c6 over F_q.

    Returns ('distinct', nroots) or ('double', r) or ('triple', r).
    """
    c2, c4, c6 = c2 % q, c4 % q, c6 % q
    # triple root first
    if q == 3:
        if c2 == 0 and c4 == 0:
            return ("triple", (-c6) % 3)  # cube map is identity on F_3
    elif q == 2:
        r = c2
        if c4 == r * r % 2 and c6 == r**3 % 2:
            return ("triple", r)
    else:
        r = -c2 * pow(3, -1, q) % q
        if (3 * r * r - c4) % q == 0 and (r**3 + c6) % q == 0:
            return ("triple", r)
    # double root
    if q == 2:
        for r in (0, 1):
            if (r**3 + c2 * r * r + c4 * r + c6) % 2 == 0:
                # multiplicity: divide out (T - r) twice
                # P(T) = (T-r)Q(T); double iff Q(r) = 0
                q1 = (c2 + r) % 2
                q0 = (c4 + r * q1) % 2
                if (r * r + q1 * r + q0) % 2 == 0:
                    return ("double", r)
        return ("distinct", _cubic_root_count(c2, c4, c6, 2))
    if q == 3:
        # P' = 2c2·T + c4 in characteristic 3; a multiple root needs c2 ≠ 0
        # (c2 = 0 with c4 = 0 was the triple case, c2 = 0 with c4 ≠ 0 is
        # squarefree), and then the root of P' must lie on P
        if c2 != 0:
            r = -c4 * pow(2 * c2, -1, 3) % 3
            if (r**3 + c2 * r * r + c4 * r + c6) % 3 == 0:
                return ("double", r)
        return ("distinct", _cubic_root_count(c2, c4, c6, 3))
    disc_zero_r = None
    denom = (c2 * c2 - 3 * c4) % q
    if denom != 0:
        r = (9 * c6 - c2 * c4) * pow(2 * denom, -1, q) % q
        if (r**3 + c2 * r * r + c4 * r + c6) % q == 0 and (3 * r * r + 2 * c2 * r + c4) % q == 0:
            disc_zero_r = r
    if disc_zero_r is not None:
        return ("double", disc_zero_r)
    return ("distinct", _cubic_root_count(c2, c4, c6, q))


def _singular_point(model, q):
    """The unique singular point mod q of a model with q | Δ, as integers."""
    a1, a2, a3, a4, a6 = model.ainvs
    if q <= 3:
        for x in range(q):
            for y in range(q):
                on = (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % q == 0
                dy = (2 * y + a1 * x + a3) % q == 0
                dx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % q == 0
                if on and dy and dx:
                    return x, y
        raise AssertionError(f"no singular point mod {q}")
    b2, b4, b6 = model.b2, model.b4, model.b6
    c4 = model.c4
    if c4 % q != 0:
        x = (18 * b6 - b2 * b4) * pow(c4, -1, q) % q
    else:
        x = -b2 * pow(12, -1, q) % q
    y = -(a1 * x + a3) * pow(2, -1, q) % q
    return x, y


def _normalize_for_step6(model, q):
    """Translate an additive model so that q | a1,a2, q² | a3,a4, q³ | a6.

    Precondition: singular point already at the origin and steps up to IV
    have fallen through (so v(b2) ≥ 1, v(a6) ≥ 2, v(b8) ≥ 3, v(b6) ≥ 3).
    """
    a1, a2 = model.a1, model.a2
    if q == 2:
        s = a2 % 2
    else:
        s = (-a1 * pow(2, -1, q)) % q
    model = transform(model, 1, 0, s, 0)
    if q == 2:
        t = 0 if model.a6 % 8 == 0 else 2
    else:
        t = (-model.a3 * pow(2, -1, q * q)) % (q * q)
    model = transform(model, 1, 0, 0, t)
    assert model.a1 % q == 0 and model.a2 % q == 0
    assert model.a3 % q**2 == 0 and model.a4 % q**2 == 0 and model.a6 % q**3 == 0
    return model, [(1, 0, s, 0), (1, 0, 0, t)]


def tate_local_data(model, q):
    """Run Tate's algorithm at q, minimizing locally as needed.

    Returns the LocalData of the local minimal model; u_exponent records how
    many times the input had to be rescaled by u = q to reach it.
    """
    data, _ = _tate_with_transforms(model, q)
    return data


def _tate_with_transforms(model, q):
    u_exp = 0
    while True:
        res = _tate_once(model, q)
        if res[0] == "restart":
            model = transform(res[1], q, 0, 0, 0)
            u_exp += 1
            continue
        kodaira, c, reduction, working = res[1:5]
        n = _vq(working.discriminant, q)
        if kodaira == "In":
            kodaira = f"I{n}"
            m_comps = n
        elif kodaira == "In*":
            nstar = res[5]
            kodaira = f"I{nstar}*"
            m_comps = 5 + nstar
        else:
            m_comps = _COMPONENTS[kodaira]
        f = 0 if reduction == "good" else n + 1 - m_comps
        data = LocalData(q, kodaira, c, n, f, reduction, u_exp)
        _check_local_invariants(data)
        return data, working


def _check_local_invariants(d):
    assert (d.conductor_exponent == 0) == (d.reduction == "good")
    assert (d.conductor_exponent == 1) == (d.reduction in ("split", "nonsplit"))
    if d.reduction == "split":
        assert d.tamagawa == d.v_disc
    if d.reduction == "additive":
        assert d.conductor_exponent >= 2


def _tate_once(model, q):
    """One pass of Tate's algorithm; ('restart', translated_model, transforms)
    signals a non-minimal model at q."""
    n = _vq(model.discriminant, q)
    if n == 0:
        return ("done", "I0", 1, "good", model)
    x0, y0 = _singular_point(model, q)
    model = transform(model, 1, x0, 0, y0)
    assert model.a3 % q == 0 and model.a4 % q == 0 and model.a6 % q == 0
    if model.b2 % q != 0:
        # multiplicative: tangent cone T² + a1T - a2
        if _quad_splits(1, model.a1, -model.a2, q):
            return ("done", "In", n, "split", model)
        c = 2 if n % 2 == 0 else 1
        return ("done", "In", c, "nonsplit", model)
    if model.a6 % q**2 != 0:
        return ("done", "II", 1, "additive", model)
    if model.b8 % q**3 != 0:
        return ("done", "III", 2, "additive", model)
    if model.b6 % q**3 != 0:
        c = 3 if _quad_splits(1, model.a3 // q, -(model.a6 // q**2), q) else 1
        return ("done", "IV", c, "additive", model)
    model, pre = _normalize_for_step6(model, q)
    c2, c4c, c6c = model.a2 // q, model.a4 // q**2, model.a6 // q**3
    kind, val = _cubic_multiple_root(c2, c4c, c6c, q)
    if kind == "distinct":
        return ("done", "I0*", 1 + val, "additive", model)
    if kind == "double":
        # shift the double root of the cubic to 0, then walk the I_n* chain
        model = transform(model, 1, q * val, 0, 0)
        nstar, c = _type_instar(model, q)
        return ("done", "In*", c, "additive", model, nstar)
    # triple root
    model = transform(model, 1, q * val, 0, 0)
    a3q, a6q = model.a3 // q**2, model.a6 // q**4
    if _quad_distinct(1, a3q, -a6q, q):
        c = 3 if _quad_splits(1, a3q, -a6q, q) else 1
        return ("done", "IV*", c, "additive", model)
    y1 = _quad_double_root(1, a3q, -a6q, q)
    model = transform(model, 1, 0, 0, q**2 * y1)
    if model.a4 % q**4 != 0:
        return ("done", "III*", 2, "additive", model)
    if model.a6 % q**6 != 0:
        return ("done", "II*", 1, "additive", model)
    assert model.a1 % q == 0 and model.a2 % q**2 == 0 and model.a3 % q**3 == 0
    return ("restart", model, [])


def _type_instar(model, q):
    """Sub-loop for type I_n* fibers: alternately examine quadratics in Y and
    X at growing q-powers until one is separable; n is the step count."""
    k = 1
    while True:
        if k % 2 == 1:
            m3 = (k + 3) // 2
            b, c = model.a3 // q**m3, -(model.a6 // q**(k + 3))
            if _quad_distinct(1, b, c, q):
                return k, 2 + 2 * bool(_quad_splits(1, b, c, q))
            y1 = _quad_double_root(1, b, c, q)
            model = transform(model, 1, 0, 0, q**m3 * y1)
        else:
            a = model.a2 // q
            m4 = (k + 4) // 2
            b, c = model.a4 // q**m4, model.a6 // q**(k + 3)
            if _quad_distinct(a, b, c, q):
                return k, 2 + 2 * bool(_quad_splits(a, b, c, q))
            x1 = _quad_double_root(a, b, c, q)
            model = transform(model, 1, q**(m4 - 1) * x1, 0, 0)
        k += 1
        assert k < 3 + _vq(model.discriminant, q), "I_n* chain failed to terminate"


def minimal_model(model):
    """The global minimal model in standard reduced form.

    Tate's algorithm at each bad prime hands back a locally minimal model;
    its internal moves are integer translations (globally harmless) plus
    u = q scalings (touching only that prime), so chaining the per-prime
    results is globally valid. A final translation normalizes
    a1 ∈ {0,1}, a2 ∈ {-1,0,1}, a3 ∈ {0,1}.
    """
    work = model
    for q, _ in arith.factorize(abs(model.discriminant)):
        data, reduced = _tate_with_transforms(work, q)
        if data.u_exponent:
            work = reduced
    work = transform(work, 1, 0, -(work.a1 // 2), 0)
    work = transform(work, 1, _reduce_a2_shift(work.a2), 0, 0)
    work = transform(work, 1, 0, 0, -(work.a3 // 2))
    assert work.a1 in (0, 1) and work.a2 in (-1, 0, 1) and work.a3 in (0, 1)
    return work


def _reduce_a2_shift(a2):
    # r with a2 + 3r in {-1, 0, 1}
    rem = a2 % 3
    target = rem - 3 if rem == 2 else rem
    return (target - a2) // 3


def is_minimal(model):
    return all(
        tate_local_data(model, q).u_exponent == 0
        for q, _ in arith.factorize(abs(model.discriminant))
    )


def quadratic_twist(model, d):
    """Global minimal model of the twist by squarefree d: y² = x³ + Ax + B
    with A = -27·c4·d², B = -54·c6·d³, which is the twist of the standard
    short form (itself isomorphic to the input over Q via u = 6).

    >>> quadratic_twist(derive_invariants([0, -1, 1, -10, -20]), 1).ainvs
    (0, -1, 1, -10, -20)
    """
    if d == 0 or not arith.is_squarefree(abs(d)):
        raise ValueError(f"twist parameter {d} must be a squarefree nonzero integer")
    twisted = derive_invariants([0, 0, 0, -27 * model.c4 * d * d, -54 * model.c6 * d**3])
    return minimal_model(twisted)


def conductor(model):
    """Conductor of a globally minimal model; non-minimal input is refused
    because every downstream normalization assumes the minimal model.

    >>> conductor(derive_invariants([0, 1, 1, -2, 0]))
    389
    """
    n = 1
    for q, _ in arith.factorize(abs(model.discriminant)):
        data = tate_local_data(model, q)
        if data.u_exponent != 0:
            raise NonMinimalModelError(
                f"model is non-minimal at {q}; supply the global minimal model"
            )
        n *= q**data.conductor_exponent
    return n


# ---------------------------------------------------------------------------
# Point counts


def ap_good(model, ell):
    """a_ell = ell + 1 - #E(F_ell) at a good prime, by quadratic character
    sum on a short model for ell >= 5 and exhaustive count for ell in {2,3}.
    """
    if model.discriminant % ell == 0:
        raise ValueError(f"{ell} is a bad prime here")
    if ell <= 3:
        return ell + 1 - _count_points_exhaustive(model, ell)
    A = (-27 * model.c4) % ell
    B = (-54 * model.c6) % ell
    x = np.arange(ell, dtype=np.int64)
    f = ((x * x % ell) * x + A * x + B) % ell
    sq = np.zeros(ell, dtype=np.int8)
    sq[(x * x) % ell] = 1
    chi = np.where(f == 0, 0, 2 * sq[f].astype(np.int64) - 1)
    a = -int(chi.sum())
    assert a * a <= 4 * ell, "Hasse bound violated"
    return a


def _count_points_exhaustive(model, ell):
    a1, a2, a3, a4, a6 = (a % ell for a in model.ainvs)
    count = 1  # point at infinity
    for x in range(ell):
        for y in range(ell):
            if (y * y + a1 * x * y + a3 * y - (x**3 + a2 * x * x + a4 * x + a6)) % ell == 0:
                count += 1
    return count


# ---------------------------------------------------------------------------
# Curve context: cached a_ell, bad-prime data, a_n sequences


CACHE_MAGIC = b"KURAP\x00"
CACHE_VERSION = 1


def curve_hash(model):
    return arith.fnv1a64(",".join(str(a) for a in model.ainvs))


@dataclass
class CurveContext:
    model: WeierstrassModel
    conductor: int
    local_data: dict
    p: int
    k: int
    label: str = ""
    root_number: int = 0  # 0 = not yet known; set from the Fricke involution
    ap_cache: dict = field(default_factory=dict)
    cache_path: str = ""

    def bad_primes(self):
        return sorted(self.local_data)

    def ap(self, ell):
        if self.conductor % ell == 0:
            red = self.local_data[ell].reduction
            return {"split": 1, "nonsplit": -1, "additive": 0}[red]
        a = self.ap_cache.get(ell)
        if a is None:
            a = ap_good(self.model, ell)
            self.ap_cache[ell] = a
        return a

    def tamagawa_product(self):
        prod = 1
        for d in self.local_data.values():
            prod *= d.tamagawa
        return prod


def curve_context(ainvs, p, k, label="", cache_path=""):
    model = derive_invariants(ainvs)
    local = {}
    for q, _ in arith.factorize(abs(model.discriminant)):
        data = tate_local_data(model, q)
        if data.u_exponent != 0:
            raise NonMinimalModelError(
                f"model is non-minimal at {q}; supply the global minimal model"
            )
        if data.reduction != "good":
            local[q] = data
    n = 1
    for q, d in local.items():
        n *= q**d.conductor_exponent
    ctx = CurveContext(model, n, local, p, k, label=label, cache_path=cache_path)
    if cache_path:
        load_ap_cache(ctx)
    return ctx


def a_n_sequence(ctx, bound):
    """Array a of length bound+1 with a[n] = a_n, by Hecke multiplicativity."""
    a = np.zeros(bound + 1, dtype=np.int64)
    if bound >= 1:
        a[1] = 1
    spf = _smallest_prime_factors(bound)
    for n in range(2, bound + 1):
        # plain int: model arithmetic must not be coerced into int64
        ell = int(spf[n])
        m, e = n, 0
        while m % ell == 0:
            m //= ell
            e += 1
        if m > 1:
            a[n] = a[m] * a[n // m]
            continue
        # n = ell^e
        aell = ctx.ap(ell)
        if ctx.conductor % ell == 0:
            a[n] = aell**e
        elif e == 1:
            a[n] = aell
        else:
            a[n] = aell * a[n // ell] - ell * a[n // ell**2]
    return a


def _smallest_prime_factors(bound):
    spf = np.arange(bound + 1, dtype=np.int64)
    for i in range(2, int(bound**0.5) + 1):
        if spf[i] == i:
            sl = spf[i * i :: i]
            sl[sl == np.arange(i * i, bound + 1, i)] = i
    return spf


def load_ap_cache(ctx):
    try:
        with open(ctx.cache_path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError:
        return
    if len(raw) < 16 or raw[:6] != CACHE_MAGIC:
        return  # corrupt header; leave the cache empty so it gets rebuilt
    version, chash = struct.unpack("<HQ", raw[6:16])
    if version != CACHE_VERSION or chash != curve_hash(ctx.model):
        return  # stale cache for another curve or format; ignore
    body = raw[16:]
    for off in range(0, len(body) - len(body) % 16, 16):
        ell, a = struct.unpack("<Qq", body[off : off + 16])
        ctx.ap_cache[int(ell)] = int(a)


def save_ap_cache(ctx):
    if not ctx.cache_path:
        return
    header = CACHE_MAGIC + struct.pack("<HQ", CACHE_VERSION, curve_hash(ctx.model))
    body = b"".join(
        struct.pack("<Qq", ell, a) for ell, a in sorted(ctx.ap_cache.items())
    )
    with open(ctx.cache_path, "wb") as fh:
        fh.write(header + body)


# ---------------------------------------------------------------------------
# Local torsion at p and the Manin-constant condition


@dataclass(frozen=True)
class LocalTorsionReport:
    status: str  # Trivial | NonTrivial | Indeterminate
    reason: str
    t: object  # int when known, None when not


def local_torsion(model, p):
    """Decide E(Q_p)[p] = 0 by reduction type at p.

    Good non-anomalous and non-split multiplicative reduction force trivial
    torsion; split multiplicative reduction has p-torsion exactly when p
    divides ord_p(j); additive reduction at p in {5,7} reduces to a single
    congruence on a translated model with every a_i divisible by p; the good
    anomalous case would need a companion-form test and stays Indeterminate.
    """
    if p < 5:
        raise ValueError("only p >= 5 is supported")
    if model.discriminant % p != 0:
        ap = ap_good(model, p)
        if ap % p == 1 % p:
            return LocalTorsionReport("Indeterminate", "good-anomalous", None)
        return LocalTorsionReport("Trivial", "good-non-anomalous", 0)
    data = tate_local_data(model, p)
    if data.u_exponent != 0:
        raise NonMinimalModelError(f"model is non-minimal at {p}")
    if data.reduction == "good":
        # p | Δ of a minimal model but reduction good cannot happen
        raise AssertionError("inconsistent local data")
    if data.reduction == "split":
        ordj = arith.v_p(model.j_invariant, p)
        if int(-ordj) % p == 0:
            return LocalTorsionReport("NonTrivial", "split-multiplicative-tate", 0)
        return LocalTorsionReport("Trivial", "split-multiplicative-tate", 0)
    if data.reduction == "nonsplit":
        return LocalTorsionReport("Trivial", "nonsplit-multiplicative", 0)
    # additive
    if p >= 11:
        return LocalTorsionReport("Trivial", "additive-large-p", 0)
    divisible = _all_divisible_form(model, p)
    if p == 5:
        hit = divisible.a4 % 25 == 10
    else:  # p == 7
        hit = divisible.a6 % 49 == 14
    if hit:
        return LocalTorsionReport("NonTrivial", "additive-congruence", None)
    return LocalTorsionReport("Trivial", "additive-congruence", 0)


def _all_divisible_form(model, p):
    # translate so every a_i is divisible by p; possible exactly in the
    # additive case, and the result is well defined modulo p² coordinatewise
    x0, y0 = _singular_point(model, p)
    m = transform(model, 1, x0, 0, y0)
    s = (-m.a1 * pow(2, -1, p)) % p
    m = transform(m, 1, 0, s, 0)
    assert all(a % p == 0 for a in m.ainvs)
    return m


def manin_constant_ok(model, p):
    """'Yes' when reduction at p is semistable (good or multiplicative), which
    makes the Manin constant prime to p; 'AssertRequired' otherwise."""
    if p < 5:
        raise ValueError("only p >= 5 is supported")
    if model.discriminant % p != 0:
        return "Yes"
    data = tate_local_data(model, p)
    return "Yes" if data.reduction in ("split", "nonsplit") else "AssertRequired"


# ---------------------------------------------------------------------------
# Mod-p image heuristic


def rho_surjectivity_probable(ctx, p, sample_count):
    """Sampling test for surjectivity of the mod-p Galois image.

    Frobenius traces a_ell and determinants ell classify the subgroup of
    GL₂(F_p) that could contain the image: witnessing an irreducible
    characteristic polynomial, both quadratic types of split polynomial, and
    a trace ratio u = a_ell²/ell outside the dihedral/exceptional locus
    {0, 1, 2, 4, roots of u²-3u+1} forces the full group.
    """
    seen_irred = seen_split = seen_nonexceptional = False
    all_reducible = True
    checked = 0
    ell = 1
    while checked < sample_count:
        ell = _next_prime(ell)
        if ctx.conductor % ell == 0 or ell == p:
            continue
        checked += 1
        a = ctx.ap(ell)
        disc = (a * a - 4 * ell) % p
        if disc != 0 and not arith.is_square_mod(disc, p):
            seen_irred = True
            all_reducible = False
        if disc != 0 and arith.is_square_mod(disc, p):
            seen_split = True
        if a % p != 0:
            u = a * a * pow(ell, -1, p) % p
            if u not in (0, 1, 2, 4) and (u * u - 3 * u + 1) % p != 0:
                seen_nonexceptional = True
    if seen_irred and seen_split and seen_nonexceptional:
        return "Surjective"
    if sample_count >= 40 and all_reducible:
        return "ReducibleSuspected"
    return "Inconclusive"


def _next_prime(n):
    n += 1
    while not arith.is_prime(n):
        n += 1
    return n


# ---------------------------------------------------------------------------
# Periods and L-values


def real_period(model, precision_bits):
    """Real Néron period of the (minimal) model by the arithmetic-geometric
    mean, doubled when Δ > 0 since E(R) then has two components.

    >>> abs(real_period(derive_invariants([0,0,0,-1,0]), 80) - 5.24411510858424) < 1e-12
    True
    """
    with mpmath.workprec(precision_bits + 24):
        g2 = mpmath.mpf(model.c4) / 12
        g3 = mpmath.mpf(model.c6) / 216
        roots = mpmath.polyroots([4, 0, -g2, -g3], extraprec=precision_bits)
        if model.discriminant > 0:
            e1, e2, e3 = sorted((r.real for r in roots), reverse=True)
            omega = mpmath.pi / mpmath.agm(
                mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2)
            )
            return +(2 * omega)
        e1 = max((r for r in roots if abs(r.imag) < mpmath.mpf(2) ** (-10)), key=lambda r: r.real).real
        others = sorted((r for r in roots), key=lambda r: abs(r - e1))[1:]
        e2, e3 = others[0], others[1]
        omega = mpmath.pi / mpmath.agm(
            mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2)
        )
        assert abs(omega.imag) < abs(omega.real) * mpmath.mpf(2) ** (-precision_bits // 2)
        return +abs(omega.real)


def l_value_numeric(ctx, precision_bits):
    """L(E,1) by the exponentially convergent sum 2·Σ aₙ/n·e^(−2πn/√N);
    exactly zero when the root number is −1."""
    if ctx.root_number == 0:
        raise ValueError("root number not yet known")
    if ctx.root_number == -1:
        return mpmath.mpf(0)
    with mpmath.workprec(precision_bits + 24):
        sqrtn = mpmath.sqrt(ctx.conductor)
        nmax = int(sqrtn * (precision_bits + 16) * mpmath.log(2) / (2 * mpmath.pi)) + 8
        a = a_n_sequence(ctx, nmax)
        x = mpmath.exp(-2 * mpmath.pi / sqrtn)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        for n in range(1, nmax + 1):
            power *= x
            if a[n]:
                total += mpmath.mpf(int(a[n])) / n * power
        return +(2 * total)


def twisted_l_value_numeric(ctx, d, precision_bits):
    """L(E, χ_D, 1) for a fundamental discriminant D coprime to N·p."""
    if ctx.root_number == 0:
        raise ValueError("root number not yet known")
    if d == 1:
        return l_value_numeric(ctx, precision_bits)
    if not arith.is_fundamental_discriminant(d):
        raise ValueError(f"{d} is not a fundamental discriminant")
    sign = ctx.root_number * arith.kronecker_symbol(d, -ctx.conductor)
    if sign == -1:
        return mpmath.mpf(0)
    with mpmath.workprec(precision_bits + 24):
        sqrtn = mpmath.sqrt(ctx.conductor)
        width = abs(d) * sqrtn
        nmax = int(width * (precision_bits + 16) * mpmath.log(2) / (2 * mpmath.pi)) + 8
        a = a_n_sequence(ctx, nmax)
        x = mpmath.exp(-2 * mpmath.pi / width)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        for n in range(1, nmax + 1):
            power *= x
            if a[n]:
                chi = arith.kronecker_symbol(d, n)
                if chi:
                    total += mpmath.mpf(int(a[n]) * chi) / n * power
        return +(2 * total)


# ---------------------------------------------------------------------------
# Group structure of E(F_ell)[p^infinity]


def _short_model_mod(model, ell):
    return (-27 * model.c4) % ell, (-54 * model.c6) % ell


def _ec_add(P, Q, A, ell):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2 and (y1 + y2) % ell == 0:
        return None
    if P == Q:
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, ell) % ell
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, ell) % ell
    x3 = (lam * lam - x1 - x2) % ell
    y3 = (lam * (x1 - x3) - y1) % ell
    return x3, y3


def _ec_mul(n, P, A, ell):
    R = None
    while n:
        if n & 1:
            R = _ec_add(R, P, A, ell)
        P = _ec_add(P, P, A, ell)
        n >>= 1
    return R


def _random_point(A, B, ell, rng):
    while True:
        x = rng.randrange(ell)
        rhs = (x * x * x + A * x + B) % ell
        y = arith.sqrt_mod(rhs, ell)
        if y is not None:
            return (x, y)


def sylow_structure(model, ell, p, samples=None, seed=0):
    """(e1, e2) with E(F_ell)[p^∞] ≅ Z/p^e1 × Z/p^e2 and e1 ≥ e2.

    Monte Carlo: random points times the prime-to-p part of the order expose
    the exponent p^e1; enough samples push the error below 2^-40.
    """
    if model.discriminant % ell == 0 or ell < 5:
        raise ValueError("need a good prime >= 5")
    order = ell + 1 - ap_good(model, ell)
    s = 0
    m = order
    while m % p == 0:
        m //= p
        s += 1
    if s == 0:
        return (0, 0)
    A, B = _short_model_mod(model, ell)
    rng = random.Random(f"{seed}:{ell}:{p}")
    n_samples = max(18, math.ceil(40 / math.log2(p)) + 4)
    if samples is not None:
        n_samples = samples
    e1 = 0
    for _ in range(n_samples):
        Q = _ec_mul(m, _random_point(A, B, ell, rng), A, ell)
        j = 0
        while Q is not None:
            Q = _ec_mul(p, Q, A, ell)
            j += 1
        e1 = max(e1, j)
        if e1 == s:
            break
    return (e1, s - e1)
