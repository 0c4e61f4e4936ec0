"""Manin-symbol presentation of weight-2 modular symbols for Gamma_0(N).

A symbol lives on P^1(Z/N); the generators S = [[0,-1],[1,0]],
T = [[0,-1],[1,-1]] (order 3) and eta = [[-1,0],[0,1]] impose

    x + xS = 0,    x + xT + xT^2 = 0,    x*eta = sign * x.

The two-term families collapse under a signed union-find (self-paired
elements with conflicting signs are forced to zero), the three-term
family by sparse elimination mod a word-size prime.  The surviving free
dimension must equal g + nu_inf - k2 - 1 on the plus quotient and
g + k2 on the minus quotient, where k2 counts cusp pairs swapped by the
real involution; k2 = 0 at squarefree level but not in general (at
N = 1058 the involution pairs up all 44 cusps over denominators 23 and
46).  Hecke operators act through Merel's matrices; the eigenline of a
rational newform is cut out by dense kernel intersections mod several
primes, CRT'd, reconstructed over Q, scaled to a content-one integer
vector, and certified afterwards with pure integer arithmetic against
every relation and a surplus of Hecke equations.  Nothing downstream
trusts floating point or any single prime.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt

import numpy as np

from ..arith import (
    crt_pair,
    divisors,
    factorize,
    is_prime,
    kronecker_symbol,
    rational_reconstruct,
)
from .linalg import PRIMES_15BIT, SparseCollapse, kernel_mod, matmul_mod, rref_mod
from .merel import merel_matrices


def _euler_phi(n):
    out = n
    for q, _ in factorize(n):
        out = out // q * (q - 1)
    return out


def genus_data(N):
    """(mu, nu2, nu3, nu_inf, genus) of X_0(N) by the standard formulas."""
    mu = N
    for q, _ in factorize(N):
        mu = mu // q * (q + 1)
    if N % 4 == 0:
        nu2 = 0
    else:
        nu2 = 1
        for q, _ in factorize(N):
            nu2 *= 1 + (0 if q == 2 else kronecker_symbol(-1, q))
    if N % 9 == 0:
        nu3 = 0
    else:
        nu3 = 1
        for q, _ in factorize(N):
            nu3 *= 1 + kronecker_symbol(-3, q)
    nu_inf = sum(_euler_phi(gcd(d, N // d)) for d in divisors(N))
    g12 = 12 + mu - 3 * nu2 - 4 * nu3 - 6 * nu_inf
    assert g12 % 12 == 0, "genus formula must give an integer"
    return mu, nu2, nu3, nu_inf, g12 // 12


def _next_prime(q):
    q += 1
    while not is_prime(q):
        q += 1
    return q


def _next_good_prime(q, N):
    q = _next_prime(q)
    while N % q == 0:
        q = _next_prime(q)
    return q


# ---------------------------------------------------------------------------
# cusps


def _normalize_cusp(u, v):
    if v < 0:
        u, v = -u, -v
    if v == 0:
        return (1, 0)
    return (u, v)


def _cusp_key(u, v, N):
    """Class invariant of the cusp u/v: (g, u*(v/g) mod gcd(g, N/g)) with
    g = gcd(v, N).  Completeness is not taken on faith: the cusp table
    checks it against the explicit equivalence criterion."""
    u, v = _normalize_cusp(u, v)
    g = gcd(v, N) if v else N
    d = gcd(g, N // g)
    if d == 1:
        return (g, 0)
    return (g, (u * ((v // g) % d)) % d)


def _inv_mod_cusp(u, v):
    if v == 0:
        return 1
    if v == 1:
        return 0
    return pow(u % v, -1, v)


def _cusps_equivalent(u1, v1, u2, v2, N):
    """s1 v2 = s2 v1 mod gcd(v1 v2, N), where u_i s_i = 1 mod v_i."""
    u1, v1 = _normalize_cusp(u1, v1)
    u2, v2 = _normalize_cusp(u2, v2)
    s1 = _inv_mod_cusp(u1, v1)
    s2 = _inv_mod_cusp(u2, v2)
    m = gcd(v1 * v2, N)
    return (s1 * v2 - s2 * v1) % m == 0


class CuspTable:
    """All Gamma_0(N)-classes of cusps with the real-involution pairing;
    representatives are fractions u/v with v | N."""

    def __init__(self, N):
        self.N = N
        reps = []
        key_to_id = {}
        for v in divisors(N):
            m = gcd(v, N // v)
            units = [u for u in range(m) if gcd(u, m) == 1] if m > 1 else [0]
            for u0 in units:
                u = u0
                for _ in range(64):
                    if gcd(u, v) == 1:
                        break
                    u += max(m, 1)
                else:
                    raise AssertionError("cusp numerator lift did not land")
                key = _cusp_key(u, v, N)
                assert key not in key_to_id, "cusp invariant collided on reps"
                key_to_id[key] = len(reps)
                reps.append((u, v))
        self.reps = reps
        self.key_to_id = key_to_id
        self.eta_of = [key_to_id[_cusp_key(-u, v, N)] for u, v in reps]
        for i, j in enumerate(self.eta_of):
            assert self.eta_of[j] == i
        self.n_swapped_pairs = sum(1 for i, j in enumerate(self.eta_of) if j > i)

    def __len__(self):
        return len(self.reps)

    def class_of(self, u, v):
        """Class id of the cusp u/v, cross-checked against the stored rep
        by the explicit criterion so a broken invariant cannot pass."""
        cid = self.key_to_id[_cusp_key(u, v, self.N)]
        ru, rv = self.reps[cid]
        assert _cusps_equivalent(u, v, ru, rv, self.N), "cusp invariant lied"
        return cid


def _bezout_pair(c, d):
    """(a, b) with a*d - b*c = 1 for coprime positive c, d."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    a0, b0 = c, d
    while b0:
        qt = a0 // b0
        a0, b0 = b0, a0 - qt * b0
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    assert a0 == 1
    return y0, -x0


# ---------------------------------------------------------------------------
# signed S/eta merge


class _SignedUnionFind:
    """Union-find tracking value[x] = sign[x] * value[root(x)]."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.sign = [1] * n
        self.dead = [False] * n

    def find(self, x):
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        acc = 1
        for y in reversed(path):
            acc *= self.sign[y]
            self.parent[y] = x
            self.sign[y] = acc
        return x, acc if path else 1

    def union(self, x, y, rel):
        """Impose value[y] = rel * value[x]."""
        rx, sx = self.find(x)
        ry, sy = self.find(y)
        if rx == ry:
            if sy != rel * sx:
                self.dead[rx] = True
            return
        self.parent[ry] = rx
        self.sign[ry] = rel * sx * sy
        if self.dead[ry]:
            self.dead[rx] = True


def _signed_merge(p1, sign):
    """Collapse x + xS = 0 and x*eta = sign*x; returns per-element class
    ids (-1 when the class is forced to zero), signs relative to the
    class representative, and the representative elements."""
    n = p1.size
    uf = _SignedUnionFind(n)
    perm_s = p1.perm_S()
    perm_eta = p1.perm_eta()
    for x in range(n):
        uf.union(x, int(perm_s[x]), -1)
        uf.union(x, int(perm_eta[x]), sign)
    class_p1 = np.full(n, -1, dtype=np.int64)
    sign_p1 = np.zeros(n, dtype=np.int64)
    reps = []
    rep_sign = []
    root_to_class = {}
    for x in range(n):
        r, s = uf.find(x)
        if uf.dead[r]:
            continue
        cid = root_to_class.get(r)
        if cid is None:
            cid = len(reps)
            root_to_class[r] = cid
            reps.append(x)
            rep_sign.append(s)  # value[rep] = s * value[root]
        class_p1[x] = cid
        sign_p1[x] = s * rep_sign[cid]  # value[x] relative to value[rep]
    return class_p1, sign_p1, np.array(reps, dtype=np.int64)


def _t_relation_rows(p1, class_p1, sign_p1):
    """One integer row x + xT + xT^2 = 0 per T-orbit, over class ids."""
    perm_t = p1.perm_T()
    n = p1.size
    seen = np.zeros(n, dtype=bool)
    rows = []
    for x in range(n):
        if seen[x]:
            continue
        y = int(perm_t[x])
        z = int(perm_t[y])
        orbit = {x, y, z}
        assert len(orbit) in (1, 3)
        for w in orbit:
            seen[w] = True
        mult = 3 if len(orbit) == 1 else 1
        acc = {}
        for w in orbit:
            c = int(class_p1[w])
            if c < 0:
                continue
            acc[c] = acc.get(c, 0) + mult * int(sign_p1[w])
        row = [(c, v) for c, v in sorted(acc.items()) if v]
        if row:
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# the space


@dataclass
class SymbolSpace:
    """Sign-quotient of Manin symbols at level N: relation data, free
    basis bookkeeping and the cusp/boundary summary."""

    N: int
    sign: int
    p1: object
    class_p1: np.ndarray
    sign_p1: np.ndarray
    class_rep: np.ndarray
    n_classes: int
    t_rows: list
    genus: int
    nu_inf: int
    cusps: CuspTable
    quotient_dim: int = -1
    cuspidal_dim: int = -1
    free_classes: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    structure_prime: int = 0
    _collapse_cache: dict = field(default_factory=dict, repr=False)

    def expected_dim(self):
        k2 = self.cusps.n_swapped_pairs
        if self.sign == +1:
            return self.genus + self.nu_inf - k2 - 1
        return self.genus + k2


def build_space(N, sign=+1):
    """Construct the sign-quotient presentation at level N and validate
    its dimension against the genus formula."""
    from .p1 import P1Index

    if N < 11:
        raise ValueError("level must be at least 11")
    if sign not in (+1, -1):
        raise ValueError("sign quotient must be +1 or -1")
    p1 = P1Index(N)
    mu, _, _, nu_inf, genus = genus_data(N)
    assert p1.size == mu
    class_p1, sign_p1, class_rep = _signed_merge(p1, sign)
    t_rows = _t_relation_rows(p1, class_p1, sign_p1)
    space = SymbolSpace(
        N=N,
        sign=sign,
        p1=p1,
        class_p1=class_p1,
        sign_p1=sign_p1,
        class_rep=class_rep,
        n_classes=len(class_rep),
        t_rows=t_rows,
        genus=genus,
        nu_inf=nu_inf,
        cusps=CuspTable(N),
    )
    expected = space.expected_dim()
    for p in PRIMES_15BIT[:6]:
        free, resolved = collapse_relations(space, p)
        if len(free) == expected:
            space.structure_prime = p
            break
    else:
        raise AssertionError(
            f"relation collapse never reached the expected dimension {expected}"
        )
    space.quotient_dim = expected
    space.free_classes = np.array(free, dtype=np.int64)
    space.cuspidal_dim = _cuspidal_dimension(space)
    return space


def collapse_relations(space, p):
    """Sparse elimination of the T-rows mod p: (free vars, expressions of
    eliminated vars over free ones).  Cached per prime."""
    hit = space._collapse_cache.get(p)
    if hit is not None:
        return hit
    rows = [[(c, v % p) for c, v in row] for row in space.t_rows]
    out = SparseCollapse(space.n_classes, rows, p).run()
    space._collapse_cache[p] = out
    return out


def expression_csr(space, free, resolved, p):
    """CSR arrays writing every class over free positions: a free class
    maps to itself, an eliminated class to its expansion, a dead class
    to nothing."""
    free_pos = {c: i for i, c in enumerate(free)}
    indptr = np.zeros(space.n_classes + 1, dtype=np.int64)
    cols_list = []
    vals_list = []
    for c in range(space.n_classes):
        i = free_pos.get(c)
        if i is not None:
            cols_list.append((i,))
            vals_list.append((1,))
        else:
            expr = resolved.get(c, {})
            cols_list.append(tuple(free_pos[v] for v in expr))
            vals_list.append(tuple(w % p for w in expr.values()))
        indptr[c + 1] = indptr[c] + len(cols_list[-1])
    total = int(indptr[-1])
    cols = np.fromiter((x for sub in cols_list for x in sub), np.int64, count=total)
    vals = np.fromiter((x for sub in vals_list for x in sub), np.int64, count=total)
    return indptr, cols, vals


def _csr_gather(indptr, cols, vals, keys):
    """Per-key CSR slices: lengths plus concatenated columns and values."""
    lens = indptr[keys + 1] - indptr[keys]
    total = int(lens.sum())
    if total == 0:
        return lens, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    starts = np.repeat(indptr[keys], lens)
    ramp = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(lens) - lens, lens)
    take = starts + ramp
    return lens, cols[take], vals[take]


def hecke_condition_matrix(space, q, csr, n_free, p):
    """Dense B with (T_q^t phi)_i = sum_j B[i,j] phi_j on free coords:
    row i accumulates the expansions of rep_i * h over Merel's h."""
    indptr, cols, vals = csr
    reps = space.class_rep[space.free_classes]
    cr = space.p1.c_rep[reps]
    dr = space.p1.d_rep[reps]
    B = np.zeros((n_free, n_free), dtype=np.int64)
    for h in merel_matrices(q):
        a, b, c, d = int(h[0, 0]), int(h[0, 1]), int(h[1, 0]), int(h[1, 1])
        idx = space.p1.index_of(cr * a + dr * c, cr * b + dr * d)
        cls = space.class_p1[idx]
        sg = space.sign_p1[idx]
        mask = cls >= 0
        rows_i = np.nonzero(mask)[0]
        lens, cc, vv = _csr_gather(indptr, cols, vals, cls[mask])
        np.add.at(B, (np.repeat(rows_i, lens), cc), np.repeat(sg[mask], lens) * vv)
    B %= p
    return B


def hecke_apply(space, q, values):
    """Transpose Hecke action on a dual class-value vector, exactly."""
    if space.N % q == 0:
        raise ValueError("Hecke action implemented away from the level only")
    out = []
    for i in range(space.n_classes):
        rep = int(space.class_rep[i])
        c0 = int(space.p1.c_rep[rep])
        d0 = int(space.p1.d_rep[rep])
        acc = 0
        for h in merel_matrices(q):
            a, b, c, d = int(h[0, 0]), int(h[0, 1]), int(h[1, 0]), int(h[1, 1])
            idx = space.p1.index_of_pair(c0 * a + d0 * c, c0 * b + d0 * d)
            cls = int(space.class_p1[idx])
            if cls >= 0:
                acc += int(space.sign_p1[idx]) * values[cls]
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# eigenline extraction


class EigenlineError(ValueError):
    pass


def extract_eigenline(space, ap_of, max_cuts=25):
    """Exact dual eigenvector for the system T_q phi = ap_of(q) phi.

    The cut pipeline runs independently mod successive 15-bit primes;
    per-class vectors are CRT'd, reconstructed over Q, scaled to a
    content-one integer vector with positive leading entry, and accepted
    only after exact integer certification.  Returns (values, used_qs).
    """
    residues = []
    primes_used = []
    used_qs = None
    anchor = None
    bad_streak = 0
    for p in PRIMES_15BIT:
        result = _eigenline_mod(space, ap_of, p, max_cuts, anchor)
        if result is None:
            bad_streak += 1
            if bad_streak >= 3:
                raise EigenlineError(
                    "eigenline not one-dimensional at three successive primes"
                )
            continue
        bad_streak = 0
        vec_p, used_qs, anchor = result
        residues.append(vec_p)
        primes_used.append(p)
        if len(primes_used) < 2:
            continue
        values = _reconstruct_integer_vector(residues, primes_used)
        if values is not None and _verify_integer_eigenvector(
            space, values, ap_of, used_qs
        ):
            return values, used_qs
        if len(primes_used) >= 12:
            # a residue may be polluted by a denominator prime; retire the
            # oldest and keep accumulating fresh ones
            residues.pop(0)
            primes_used.pop(0)
    raise EigenlineError("eigenvector reconstruction failed across the prime budget")


def _eigenline_mod(space, ap_of, p, max_cuts, anchor):
    """One full extraction mod p; None when p behaves badly."""
    free, resolved = collapse_relations(space, p)
    if len(free) != space.expected_dim():
        return None
    csr = expression_csr(space, free, resolved, p)
    n_free = len(free)
    K = None
    used = []
    q = 1
    for _ in range(max_cuts):
        q = _next_good_prime(q, space.N)
        a = ap_of(q) % p
        B = hecke_condition_matrix(space, q, csr, n_free, p)
        if K is None:
            d = np.diag_indices(n_free)
            B[d] = (B[d] - a) % p
            K = kernel_mod(B, p)
        else:
            C = (matmul_mod(B, K, p) - a * K) % p
            K = matmul_mod(K, kernel_mod(C, p), p)
        del B
        used.append(q)
        if K.shape[1] == 0:
            raise EigenlineError(
                f"eigenspace empty after cutting at T_{q}: the eigenvalue "
                f"system does not occur at this level and sign"
            )
        if K.shape[1] == 1:
            break
    if K.shape[1] != 1:
        return None
    phi = K[:, 0] % p
    # expand free coordinates to every class through the expressions
    indptr, cols, vals = csr
    all_cls = np.arange(space.n_classes, dtype=np.int64)
    lens, cc, vv = _csr_gather(indptr, cols, vals, all_cls)
    vec = np.zeros(space.n_classes, dtype=np.int64)
    np.add.at(vec, np.repeat(all_cls, lens), vv * phi[cc] % p)
    vec %= p
    if anchor is None:
        nz = np.nonzero(vec)[0]
        if len(nz) == 0:
            return None
        anchor = int(nz[0])
    a0 = int(vec[anchor]) % p
    if a0 == 0:
        return None  # p divides the anchor value; unusable for CRT
    vec = vec * pow(a0, -1, p) % p
    return vec, used, anchor


def _reconstruct_integer_vector(residues, primes):
    """CRT + rational reconstruction, cleared to a content-one integer
    vector with positive leading entry; None when any entry fails."""
    M = 1
    for p in primes:
        M *= p
    bound = isqrt((M - 1) // 2)
    n = len(residues[0])
    fracs = []
    for i in range(n):
        r, m = int(residues[0][i]), primes[0]
        for vec, p in zip(residues[1:], primes[1:]):
            r, m = crt_pair(r, m, int(vec[i]), p), m * p
        val = rational_reconstruct(r, m, bound, bound)
        if val is None:
            return None
        fracs.append(val)
    num_gcd = 0
    den_lcm = 1
    for f in fracs:
        num_gcd = gcd(num_gcd, f.numerator)
        den_lcm = den_lcm * f.denominator // gcd(den_lcm, f.denominator)
    if num_gcd == 0:
        return None
    scale = Fraction(den_lcm, num_gcd)
    out = np.zeros(n, dtype=np.int64)
    lead = 0
    for i, f in enumerate(fracs):
        v = f * scale
        assert v.denominator == 1
        assert abs(v.numerator) < (1 << 62)
        out[i] = v.numerator
        if lead == 0 and v.numerator != 0:
            lead = 1 if v.numerator > 0 else -1
    if lead < 0:
        out = -out
    return out


def _verify_integer_eigenvector(space, values, ap_of, used_qs):
    """Integer certification: all three relation families on every P^1
    element, then Merel sums for the cut primes plus two fresh ones."""
    p1 = space.p1
    cls = space.class_p1
    w = np.where(cls >= 0, values[np.clip(cls, 0, None)] * space.sign_p1, 0)
    assert np.abs(w).max(initial=0) < (1 << 55)
    perm_s = p1.perm_S()
    perm_t = p1.perm_T()
    perm_eta = p1.perm_eta()
    if (w + w[perm_s] != 0).any():
        return False
    if (w + w[perm_t] + w[perm_t[perm_t]] != 0).any():
        return False
    if (w[perm_eta] != space.sign * w).any():
        return False
    checks = list(used_qs)
    q = checks[-1]
    for _ in range(2):
        q = _next_good_prime(q, space.N)
        checks.append(q)
    cr, dr = p1.c_rep, p1.d_rep
    for q in checks:
        acc = np.zeros(p1.size, dtype=np.int64)
        for h in merel_matrices(q):
            a, b, c, d = int(h[0, 0]), int(h[0, 1]), int(h[1, 0]), int(h[1, 1])
            acc += w[p1.index_of(cr * a + dr * c, cr * b + dr * d)]
        if (acc != ap_of(q) * w).any():
            return False
    return True


# ---------------------------------------------------------------------------
# boundary map


def _cuspidal_dimension(space):
    """Dimension of the kernel of the boundary map on the quotient.

    The boundary of a class generator with coprime bottom row (c, d) is
    the difference of the cusps a/c and b/d of an SL2 lift; landing in
    the sign-coinvariants of the cusp span means folding each cusp onto
    its involution orbit with the quotient sign, so a self-paired cusp
    dies on the minus side."""
    cusps = space.cusps
    eta_of = cusps.eta_of
    s = space.sign
    col_of = {}
    rows = []
    for cls in space.free_classes:
        rep = int(space.class_rep[cls])
        c0 = int(space.p1.c_rep[rep])
        d0 = int(space.p1.d_rep[rep])
        a, b = _bezout_pair(c0, d0)
        assert a * d0 - b * c0 == 1
        entries = {}
        for (uu, vv), coef in (((a, c0), 1), ((b, d0), -1)):
            cid = cusps.class_of(uu, vv)
            orb = min(cid, eta_of[cid])
            if eta_of[cid] == cid and s == -1:
                continue  # self-paired cusp is zero in the minus coinvariants
            fold = coef if cid == orb else coef * s
            entries[orb] = entries.get(orb, 0) + fold
        row = {}
        for orb, coef in entries.items():
            if coef:
                if orb not in col_of:
                    col_of[orb] = len(col_of)
                row[col_of[orb]] = coef
        rows.append(row)
    if not col_of:
        return len(rows)
    bnd = np.zeros((len(rows), len(col_of)), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, coef in row.items():
            bnd[i, j] = coef
    p = space.structure_prime
    rank = len(rref_mod(bnd % p, p))
    return len(rows) - rank
