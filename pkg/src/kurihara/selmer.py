"""Structure predictions for the p-primary Selmer group from a delta scan.

The least nu with a nonvanishing delta predicts the Z_p-corank r, and the
valuation floors dhat(i) along i = r, r+2, ... pair up into square torsion
blocks: each difference halves into an exponent e, contributing (Z/p^e)^2.
The same floors read off the Fitting ideals of the dual Selmer group, so a
scan that looked deep enough determines the whole group up to the usual
caveats.  Those caveats are explicit here: the torsion part is conditional
on finiteness of the p-primary Tate-Shafarevich group, the floors are only
search minima until saturated, and every report drags along a ledger saying
which hypotheses were verified, which were asserted by the user, and which
stayed open.
"""

from dataclasses import dataclass

from .arith import v_p
from .curve import (
    local_torsion,
    manin_constant_ok,
    rho_surjectivity_probable,
    sylow_structure,
)

STATUS_OK = "ok"
STATUS_UNSATURATED = "unsaturated"
STATUS_NO_WITNESS = "no-witness"

VERIFIED = "Verified"
ASSERTED = "Asserted"
INDETERMINATE = "Indeterminate"
FAILED = "Failed"


@dataclass(frozen=True)
class SelmerPrediction:
    p: int
    corank: int | None
    # torsion exponents e_1 >= e_2 >= ..., trailing zeros dropped;
    # None when the search data cannot support a group claim
    exponents: tuple | None
    # (index, exponent) pairs for the Fitting ideals of the dual group;
    # exponent None encodes the zero ideal below the corank
    fitting: tuple
    length: int | None  # of the co-divisible part: dhat(r) - dhat(inf)
    saturated: bool
    stabilized: bool
    precision_limited: bool
    status: str
    note: str = ""

    def torsion_group(self):
        if self.exponents is None:
            return None
        if not self.exponents:
            return "trivial"
        return " x ".join(f"(Z/{self.p ** e})^2" for e in self.exponents)

    def group(self):
        if self.corank is None or self.exponents is None:
            return None
        parts = []
        if self.corank:
            parts.append(f"(Q_{self.p}/Z_{self.p})^{self.corank}")
        parts.extend(f"(Z/{self.p ** e})^2" for e in self.exponents)
        return " x ".join(parts) if parts else "trivial"


def predict_structure(coll):
    """Read corank, torsion exponents, Fitting data off a completed scan.

    Only indices of the corank's parity carry information; the opposite
    parity vanishes identically by the functional equation.  The emitted
    torsion is always a square M + M.  A difference that is negative or
    odd, or a floor sequence that stops short of its own minimum, is a
    sign the search has not saturated, and then no group is claimed.
    """
    r = coll.ord_estimate
    p = coll.p
    if r is None:
        top = max(coll.partials) if coll.partials else 0
        return SelmerPrediction(
            p=p, corank=None, exponents=None, fitting=(), length=None,
            saturated=False, stabilized=False,
            precision_limited=coll.precision_limited,
            status=STATUS_NO_WITNESS,
            note=f"no nonvanishing witness with nu <= {top}; "
                 "no corank claim can be made",
        )
    vals = []
    nu = r
    while nu in coll.partials:
        mv = coll.partials[nu].min_valuation
        if mv is None:
            break  # all entries at this depth vanished: floor unknown here
        vals.append((nu, mv))
        nu += 2
    dhat_inf = coll.min_valuation_overall
    seq = [mv for _, mv in vals]
    fitting = [(i, None) for i in range(r)]
    fitting += [(nu, mv - dhat_inf) for nu, mv in vals]
    length = seq[0] - dhat_inf
    diffs = [seq[j] - seq[j + 1] for j in range(len(seq) - 1)]
    stabilized = seq[-1] == 0 or (len(seq) >= 2 and seq[-1] == seq[-2])
    saturated = coll.partials[vals[-1][0]].saturated
    status = STATUS_OK
    note = ""
    exponents = None
    if any(d < 0 or d % 2 for d in diffs) or seq[-1] != dhat_inf:
        status = STATUS_UNSATURATED
        note = "floor sequence not consistent with a square group yet"
    elif seq[-1] > 0 and len(seq) == 1:
        status = STATUS_UNSATURATED
        note = ("positive floor with a single usable index: torsion cannot "
                "be split into exponents yet")
    else:
        exps = [d // 2 for d in diffs]
        while exps and exps[-1] == 0:
            exps.pop()
        exponents = tuple(exps)
    return SelmerPrediction(
        p=p, corank=r, exponents=exponents, fitting=tuple(fitting),
        length=length, saturated=saturated, stabilized=stabilized,
        precision_limited=coll.precision_limited, status=status, note=note,
    )


def rank_upper_bound(kn):
    """nu(n) bounds the Mordell-Weil rank once delta_n is nonzero."""
    if kn.is_zero:
        raise ValueError("witness must be nonzero at its working precision")
    return kn.modulus.nu


def parity_check(coll, w):
    """The corank parity must match the functional-equation sign; anything
    else means the pipeline is inconsistent with itself."""
    if coll.ord_estimate is None:
        raise ValueError("no vanishing-order estimate to check")
    return "Consistent" if (-1) ** coll.ord_estimate == w else "Inconsistent"


def tamagawa_conjecture_check(coll, ctx):
    """Compare the observed valuation floor with sum of v_p(c_ell).

    The floor from a finite search only ever over-estimates, so observing
    less than the Tamagawa sum flags a bug, equality is a match, and more
    just means the witness attaining the conjectured floor was not found.
    """
    p = coll.p
    target = sum(int(v_p(d.tamagawa, p)) for d in ctx.local_data.values())
    observed = coll.min_valuation_overall
    if observed is None or observed > target:
        status = "UpperBoundOnly"
    elif observed == target:
        status = "Match"
    else:
        status = "Mismatch"
    return {
        "sum_tamagawa_valuations": target,
        "observed_floor": observed,
        "status": status,
    }


def hypothesis_ledger(ctx, p, assert_manin=False, assert_surjective=False,
                      samples=40):
    """Checklist of the inputs the structure statements assume.

    Each entry is (status, reason) with status Verified, Asserted,
    Indeterminate or Failed.  Verified means a finite certificate was
    found; Indeterminate means neither a certificate nor a counterexample
    is available at this level of effort.
    """
    ledger = {}
    if assert_surjective:
        ledger["rho_surjective"] = (ASSERTED, "user assertion")
    else:
        probe = rho_surjectivity_probable(ctx, p, samples)
        ledger["rho_surjective"] = {
            "Surjective": (VERIFIED,
                           "sampled Frobenius data forces the full image"),
            "Inconclusive": (INDETERMINATE,
                             f"no certificate in {samples} samples"),
            "ReducibleSuspected": (INDETERMINATE,
                                   "every sampled characteristic polynomial "
                                   "splits; image may be reducible"),
        }[probe]
    if assert_manin:
        ledger["manin_ok"] = (ASSERTED, "user assertion")
    elif manin_constant_ok(ctx.model, p) == "Yes":
        ledger["manin_ok"] = (VERIFIED, "semistable at p")
    else:
        ledger["manin_ok"] = (INDETERMINATE,
                              "additive reduction at p: assert explicitly")
    lt = local_torsion(ctx.model, p)
    ledger["local_torsion_trivial"] = (
        {"Trivial": VERIFIED, "NonTrivial": FAILED,
         "Indeterminate": INDETERMINATE}[lt.status],
        lt.reason,
    )
    bad = [ell for ell, d in sorted(ctx.local_data.items())
           if d.tamagawa % p == 0]
    if bad:
        ledger["tamagawa_prime_to_p"] = (
            FAILED, "p divides c_ell at " + ", ".join(str(q) for q in bad))
    else:
        ledger["tamagawa_prime_to_p"] = (
            VERIFIED, "every Tamagawa factor is prime to p")
    return ledger


def semilocal_report(coll, ctx, assert_manin=False, assert_surjective=False,
                     seed=0, samples=40):
    """Describe the mod-p Selmer group through a single witness.

    A nonvanishing delta at n of minimal nu identifies the mod-p Selmer
    group with the direct sum of E(F_ell) tensor Z/p over ell dividing n,
    each factor's dimension read from its Sylow p-structure.  A definitely
    failed hypothesis makes the description inapplicable; hypotheses that
    are merely unverified leave it in place, conditionally, and are listed.
    """
    p = coll.p
    if ctx.p != p:
        raise ValueError("scan and curve context disagree on p")
    ledger = hypothesis_ledger(ctx, p, assert_manin=assert_manin,
                               assert_surjective=assert_surjective,
                               samples=samples)
    report = {
        "hypotheses": {
            name: {"status": st, "reason": why}
            for name, (st, why) in ledger.items()
        },
    }
    failed = sorted(name for name, (st, _) in ledger.items() if st == FAILED)
    if failed:
        report["status"] = "NotApplicable"
        report["reasons"] = failed
        return report
    # mod-p witnesses are the entries that are units at any working depth
    unit_entries = [kn for kn in coll.entries if kn.valuation == 0]
    if not unit_entries:
        report["status"] = "NoWitness"
        return report
    ord1 = min(kn.modulus.nu for kn in unit_entries)
    wit = next(kn for kn in unit_entries if kn.modulus.nu == ord1)
    factors = []
    for q in wit.modulus.primes:
        e1, e2 = sylow_structure(ctx.model, q.ell, p, seed=seed)
        factors.append({
            "ell": q.ell,
            "dimension": int(e1 > 0) + int(e2 > 0),
            "sylow": [e1, e2],
        })
    report["status"] = "Isomorphism"
    report["conditional_on"] = sorted(
        name for name, (st, _) in ledger.items() if st != VERIFIED)
    report["witness_n"] = wit.modulus.n
    report["witness_factors"] = [q.ell for q in wit.modulus.primes]
    report["mod_p_ord"] = ord1
    report["factors"] = factors
    report["selmer_dimension"] = sum(f["dimension"] for f in factors)
    report["rank_if_sha_trivial"] = ord1
    return report


def prediction_json(pred, hypotheses=None):
    """JSON-ready dict for a prediction, deterministic field order."""
    doc = {
        "corank": pred.corank,
        "torsion": None if pred.exponents is None
        else [[pred.p, e, 2] for e in pred.exponents],
        "sha": pred.torsion_group(),
        "group": pred.group(),
        "fitting": [[i, e] for i, e in pred.fitting],
        "length": pred.length,
        "flags": {
            "status": pred.status,
            "saturated": pred.saturated,
            "stabilized": pred.stabilized,
            "precision_limited": pred.precision_limited,
        },
        "note": pred.note,
    }
    if hypotheses is not None:
        doc["hypotheses"] = {
            name: {"status": st, "reason": why}
            for name, (st, why) in hypotheses.items()
        }
    return doc
