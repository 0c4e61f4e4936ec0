"""Kurihara numbers and their vanishing-order bookkeeping.

For a squarefree product n of sieved primes the number

    delta_n = sum over a in (Z/n)^* of [a/n] * prod_{ell | n} log_eta_ell(a)

lives in Z/p^v(I_n) and is well defined up to a unit, so everything
reported here is either a residue tagged with its working power or a
valuation.  The sum is evaluated in vectorized chunks: path values of
the eigensymbol arrive as exact integers, are checked for
p-integrality against the symbol's unit scale, and reduced once; the
discrete-log factors come from per-prime tables reduced mod p^k.

Scans enumerate moduli per nu in colexicographic order.  Moduli of the
parity forced to vanish by the functional equation are not skipped
silently: a small audit sample is computed in full and any nonzero
value fails the run, which makes the parity theorem an end-to-end test
of the symbols, the logs, and the normalization at once.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import INF, v_p
from .kolyvagin import Modulus, enumerate_moduli, sieve

CONSISTENT = "consistent"
VIOLATION = "violation"

NORM_UNIT = "p-normalized"
NORM_PINNED = "pinned"

_CHUNK = 1 << 21


@dataclass(frozen=True)
class KuriharaNumber:
    modulus: Modulus
    k_used: int
    value: int  # residue in [0, p^k_used)
    valuation: int  # capped at k_used; value == 0 means "at least k_used"
    norm_tag: str

    @property
    def is_zero(self):
        return self.valuation >= self.k_used


@dataclass
class NuRecord:
    nu: int
    computed: int = 0
    min_valuation: int | None = None
    witnesses: int = 0  # moduli attaining the minimum
    saturated: bool = False
    audited_only: bool = False


@dataclass
class DeltaCollection:
    p: int
    k: int
    sieve_bound: int
    budgets: dict
    entries: list = field(default_factory=list)
    partials: dict = field(default_factory=dict)
    ord_estimate: int | None = None
    min_valuation_overall: int | None = None
    parity_audit: str = "pass"
    precision_limited: bool = False


def _unit_scale_parts(sym, p):
    """Split the stage-1 scale into p-power shift and p-unit parts."""
    lam = sym.lambda_p
    if lam is None:
        raise ValueError("symbol has no first-stage normalization")
    shift = v_p(lam, p)
    unit = lam / Fraction(p) ** shift
    assert unit.numerator % p and unit.denominator % p
    return int(shift), unit


def _residues_of_paths(paths, p, k_used, shift, unit):
    """Exact reduction of lambda*path mod p^{k_used}; raises when any
    scaled value fails to be a p-adic integer."""
    pk = p**k_used
    if shift < 0:
        pt = p ** (-shift)
        if np.any(paths % pt):
            raise ArithmeticError(
                "non-p-integral symbol value in the summation range"
            )
        scaled = (paths // pt) % pk
    else:
        scaled = (paths % pk) * pow(p, shift, pk) % pk
    u = unit.numerator * pow(unit.denominator, -1, pk) % pk
    return scaled * u % pk


def _coprime_lanes(lo, hi, ells):
    a = np.arange(lo, hi, dtype=np.int64)
    keep = np.ones(len(a), dtype=bool)
    for ell in ells:
        keep &= a % ell != 0
    return a[keep]


def delta(sym, modulus, k_used):
    """The Kurihara number at the modulus, as a residue mod p^{k_used}."""
    p = sym.p
    if k_used < 1:
        raise ValueError("k_used must be positive")
    if k_used > modulus.i_valuation:
        raise ValueError(
            f"k_used={k_used} exceeds v(I_n)={modulus.i_valuation} at n={modulus.n}"
        )
    shift, unit = _unit_scale_parts(sym, p)
    pk = p**k_used
    if modulus.nu == 0:
        val = sym.lambda_p * sym.path_value(0, 1)
        if v_p(val, p) < 0:
            raise ArithmeticError("delta_1 is not p-integral")
        res = val.numerator * pow(val.denominator, -1, pk) % pk
        v = min(v_p(res, p), k_used) if res else k_used
        return KuriharaNumber(modulus, k_used, int(res), int(v), NORM_UNIT)
    n = modulus.n
    ells = [q.ell for q in modulus.primes]
    logtabs = [
        np.array(q.log_table().table, dtype=np.int64) % pk for q in modulus.primes
    ]
    total = 0
    for lo in range(1, n, _CHUNK):
        a = _coprime_lanes(lo, min(lo + _CHUNK, n), ells)
        if not len(a):
            continue
        res = _residues_of_paths(sym.path_values(a, n), p, k_used, shift, unit)
        for ell, tab in zip(ells, logtabs):
            res = res * tab[a % ell] % pk
        total = (total + int(res.sum())) % pk
    v = min(v_p(total, p), k_used) if total else k_used
    return KuriharaNumber(modulus, k_used, int(total), int(v), NORM_UNIT)


def delta_1(sym):
    """Exact delta_1 = [0] as a rational, preferring the pinned scale,
    together with its p-valuation."""
    raw = sym.path_value(0, 1)
    if sym.lambda_pinned is not None:
        val = sym.lambda_pinned * raw
        tag = NORM_PINNED
    else:
        val = sym.lambda_best() * raw
        tag = NORM_UNIT
    return val, v_p(val, sym.p), tag


def mazur_tate_truncation(sym, modulus, k_used):
    """Coefficients of the truncated theta element: one residue per
    subset S of the primes dividing n, the coefficient at S being
    sum_a [a/n] * prod_{ell in S} log_ell(a).  Shares no accumulation
    structure with delta(), which multiplies all logs in sequence."""
    p = sym.p
    if k_used > modulus.i_valuation:
        raise ValueError("k_used exceeds v(I_n)")
    shift, unit = _unit_scale_parts(sym, p)
    pk = p**k_used
    nu = modulus.nu
    ells = [q.ell for q in modulus.primes]
    logtabs = [
        np.array(q.log_table().table, dtype=np.int64) % pk for q in modulus.primes
    ]
    coeffs = [0] * (1 << nu)
    n = modulus.n
    start = 1 if nu else 0
    for lo in range(start, max(n, 1), _CHUNK):
        a = _coprime_lanes(lo, min(lo + _CHUNK, n), ells) if nu else np.array([0])
        if not len(a):
            continue
        base = _residues_of_paths(sym.path_values(a, max(n, 1)), p, k_used, shift, unit)
        for mask in range(1 << nu):
            term = base
            for j in range(nu):
                if mask >> j & 1:
                    term = term * logtabs[j][a % ells[j]] % pk
            coeffs[mask] = (coeffs[mask] + int(term.sum())) % pk
    return coeffs


def functional_sign_check(w, modulus, kn):
    """The functional equation forces delta_n = 0 whenever the parity of
    nu(n) disagrees with the root number; a nonzero value there means
    the pipeline is broken, not the mathematics."""
    if w * (-1) ** modulus.nu == 1:
        return CONSISTENT
    return CONSISTENT if kn.is_zero else VIOLATION


def unit_invariance_audit(sym, modulus, k_used, alternate_roots):
    """Recompute delta with different primitive roots; valuations must
    not move since the choice only changes the value by a unit."""
    from .arith import primitive_root
    from .kolyvagin import KolyvaginPrime

    base = delta(sym, modulus, k_used)
    swapped = []
    for q in modulus.primes:
        eta = alternate_roots.get(q.ell, q.eta) if isinstance(alternate_roots, dict) \
            else _next_primitive_root(q.ell, q.eta)
        swapped.append(KolyvaginPrime(q.ell, q.a_ell, q.k_ell, eta))
    other = delta(sym, Modulus(tuple(swapped)), k_used)
    return base.valuation == other.valuation


def _next_primitive_root(ell, eta):
    from .arith import factorize

    qs = [q for q, _ in factorize(ell - 1)]
    g = eta + 1
    while g < ell:
        if all(pow(g, (ell - 1) // q, ell) != 1 for q in qs):
            return g
        g += 1
    raise ValueError(f"no primitive root beyond {eta} mod {ell}")


def scan(sym, ctx, p, k, sieve_bound, nu_max, budget_per_nu,
         audit_sample=5, saturation_witnesses=3):
    """Compute delta over enumerated moduli and assemble vanishing-order
    estimates.  Parities forced to vanish get a small audited sample;
    matching parities get the full budget (an int, or a dict keyed by nu).
    Per-nu minima aggregate nonzero entries only: a vanishing entry
    certifies nothing below its own k_used, so it never sets a minimum."""
    if ctx.root_number == 0:
        raise ValueError("root number must be settled before scanning")
    w = ctx.root_number
    # the pool is always the depth-1 sieve: moduli built from low-k_ell
    # primes still carry k_used = min(k, v(I_n)) meaningful digits, and
    # mixing depths is what lets a single scan see delta_1 mod p^k next to
    # mod-p witnesses at composite n
    primes = sieve(ctx, p, 1, sieve_bound)
    if isinstance(budget_per_nu, dict):
        budgets = {nu: int(budget_per_nu.get(nu, 0)) for nu in range(nu_max + 1)}
    else:
        budgets = {nu: int(budget_per_nu) for nu in range(nu_max + 1)}
    coll = DeltaCollection(p=p, k=k, sieve_bound=sieve_bound, budgets=budgets)
    for nu in range(nu_max + 1):
        rec = NuRecord(nu=nu)
        matching = w * (-1) ** nu == 1
        rec.audited_only = not matching
        budget = budgets[nu] if matching else audit_sample
        for modulus in enumerate_moduli(primes, nu, budget):
            k_used = min(k, modulus.i_valuation)
            kn = delta(sym, modulus, k_used)
            if functional_sign_check(w, modulus, kn) == VIOLATION:
                coll.parity_audit = "fail"
                raise ArithmeticError(
                    f"parity violation at n={modulus.n}: "
                    f"delta={kn.value} mod {p}^{kn.k_used} should vanish"
                )
            coll.entries.append(kn)
            rec.computed += 1
            if matching and not kn.is_zero:
                if rec.min_valuation is None or kn.valuation < rec.min_valuation:
                    rec.min_valuation = kn.valuation
                    rec.witnesses = 1
                elif kn.valuation == rec.min_valuation:
                    rec.witnesses += 1
        if rec.min_valuation is not None:
            rec.saturated = (
                rec.witnesses >= saturation_witnesses
                and rec.min_valuation < k - 1
            )
        coll.partials[nu] = rec
    found = [
        (nu, r.min_valuation)
        for nu, r in coll.partials.items()
        if r.min_valuation is not None
    ]
    if found:
        # every recorded minimum came from a nonzero entry, hence is < k
        dhat_inf = min(v for _, v in found)
        coll.min_valuation_overall = dhat_inf
        coll.ord_estimate = min(nu for nu, _ in found)
        # a zero near the working precision may only mean the precision
        # ran out, not that the true value vanishes; parity-forced zeros
        # are expected at every precision and prove nothing either way
        coll.precision_limited = any(
            kn.is_zero
            and w * (-1) ** kn.modulus.nu == 1
            and kn.k_used <= dhat_inf + 1
            for kn in coll.entries
        )
    return coll


def collection_json(coll, curve_label=""):
    """Deterministic JSON-ready dict for a scan result."""
    return {
        "curve": curve_label,
        "p": coll.p,
        "k": coll.k,
        "bound": coll.sieve_bound,
        "budgets": {str(nu): b for nu, b in sorted(coll.budgets.items())},
        "entries": [
            {
                "n": kn.modulus.n,
                "factors": [q.ell for q in kn.modulus.primes],
                "k_used": kn.k_used,
                "value": kn.value,
                "valuation": kn.valuation,
            }
            for kn in coll.entries
        ],
        "partials": [
            {
                "nu": rec.nu,
                "computed": rec.computed,
                "min_valuation": rec.min_valuation,
                "saturated": rec.saturated,
                "audited_only": rec.audited_only,
            }
            for _, rec in sorted(coll.partials.items())
        ],
        "ord_estimate": coll.ord_estimate,
        "parity_audit": coll.parity_audit,
        "precision_limited": coll.precision_limited,
    }
