"""Canonical serialization of eigensymbols.

Files let heavy levels skip the eigenline computation: the importer
rebuilds the P^1 index and the relation merge deterministically, drops
in the stored class values, and then refuses the file unless it passes
the same certifications a fresh build would: Hecke value recurrences
for the recorded (q, a_q) pairs, the involution sign, the curve hash,
and the first-stage normalization scale.  A twisted file nests its
partner symbol and is re-synthesized through the character unfolding on
import, so nothing evaluator-shaped is ever trusted blindly.

Serialization is canonical: sorted keys, compact separators, sparse
vectors sorted by index, rationals in lowest terms.  Re-exporting an
imported symbol reproduces the file byte for byte.
"""

import json
from fractions import Fraction

import numpy as np

from ..curve import curve_hash, derive_invariants
from .eigen import (
    EigenSymbol,
    TwistedEigenSymbol,
    fricke_sign,
    hecke_value_check,
    normalize_pinned,
    normalize_unit_scale,
)

SCHEMA_VERSION = 1


def _frac_pair(fr):
    fr = Fraction(fr)
    return [int(fr.numerator), int(fr.denominator)]


def _pair_frac(pair):
    num, den = pair
    if den <= 0:
        raise ValueError("rational with nonpositive denominator")
    fr = Fraction(num, den)
    if (fr.numerator, fr.denominator) != (num, den):
        raise ValueError("rational not in lowest terms")
    return fr


def _vector_triples(class_values):
    out = []
    for i in np.nonzero(class_values)[0]:
        out.append([int(i), int(class_values[i]), 1])
    return out


def _triples_vector(triples, n_classes):
    values = np.zeros(n_classes, dtype=np.int64)
    last = -1
    for idx, num, den in triples:
        if den != 1:
            raise ValueError("stored eigenvector entries must be integers")
        if idx <= last or not 0 <= idx < n_classes:
            raise ValueError("eigenvector indices not sorted and in range")
        last = idx
        values[idx] = num
    return values


def _partner_payload(sym):
    return {
        "level": int(sym.N),
        "sign": int(sym.sign),
        "basis_index_map": [int(r) for r in sym.class_rep],
        "dual_vector": _vector_triples(sym.class_values),
        "verified_hecke": [[int(q), int(a)] for q, a in sym.verified_hecke],
    }


def export_eigensymbol(sym, path, ainvs=None):
    """Write the symbol to a canonical JSON file; the curve coefficients
    default to the ones recorded on the symbol."""
    ainvs = list(ainvs if ainvs is not None else sym.ainvs)
    if sym.lambda_p is None:
        raise ValueError("normalize before exporting")
    if len(sym.verified_hecke) < 3:
        raise ValueError("need at least three certified Hecke pairs")
    model = derive_invariants(ainvs)
    doc = {
        "version": SCHEMA_VERSION,
        "level": int(sym.N),
        "sign": int(sym.sign),
        "ainvs": [int(a) for a in ainvs],
        "curve_hash": int(curve_hash(model)),
        "p": int(sym.p),
        "lambda_p_normalized": _frac_pair(sym.lambda_p),
        "lambda_pinned": None
        if sym.lambda_pinned is None
        else _frac_pair(sym.lambda_pinned),
        "pin_note": sym.pin_note,
        "fricke_eps": int(sym.fricke_eps),
        "verified_hecke": [[int(q), int(a)] for q, a in sym.verified_hecke],
    }
    if isinstance(sym, TwistedEigenSymbol):
        doc["basis_index_map"] = []
        doc["dual_vector"] = []
        doc["twist"] = {
            "disc": int(sym.D),
            "partner": _partner_payload(sym.partner),
        }
    else:
        doc["basis_index_map"] = [int(r) for r in sym.class_rep]
        doc["dual_vector"] = _vector_triples(sym.class_values)
    text = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _rebuild_native(level, sign, p, payload):
    n_classes = len(payload["basis_index_map"])
    values = _triples_vector(payload["dual_vector"], n_classes)
    sym = EigenSymbol.from_class_values(level, sign, p, values)
    if [int(r) for r in sym.class_rep] != list(payload["basis_index_map"]):
        raise ValueError("basis index map does not match the rebuilt merge")
    return sym


def _check_hecke(sym, pairs):
    if len(pairs) < 3:
        raise ValueError("fewer than three certified Hecke pairs in file")
    for q, a_q in pairs:
        if not hecke_value_check(sym, int(q), int(a_q)):
            raise ValueError(f"stored symbol fails the T_{q} value recurrence")
    sym.verified_hecke = [(int(q), int(a)) for q, a in pairs]


def import_eigensymbol(path, ctx=None, verify_pin=False):
    """Load a symbol file, re-certify it, and return the evaluator.
    When a curve context is supplied the file must belong to that curve;
    verify_pin additionally recomputes the absolute scale numerically."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported symbol file version {doc.get('version')}")
    model = derive_invariants([int(a) for a in doc["ainvs"]])
    if int(curve_hash(model)) != int(doc["curve_hash"]):
        raise ValueError("curve hash does not match the stored coefficients")
    if ctx is not None:
        if int(curve_hash(ctx.model)) != int(doc["curve_hash"]):
            raise ValueError("symbol file belongs to a different curve")
        if int(doc["p"]) != ctx.p:
            raise ValueError(
                f"symbol file was normalized for p={doc['p']}, context has p={ctx.p}"
            )
    level, sign, p = int(doc["level"]), int(doc["sign"]), int(doc["p"])
    if "twist" in doc:
        tw = doc["twist"]
        partner_pl = tw["partner"]
        partner = _rebuild_native(
            int(partner_pl["level"]), int(partner_pl["sign"]), p, partner_pl
        )
        _check_hecke(partner, partner_pl["verified_hecke"])
        sym = TwistedEigenSymbol(partner, int(tw["disc"]), level, p)
    else:
        sym = _rebuild_native(level, sign, p, doc)
    sym.ainvs = [int(a) for a in doc["ainvs"]]
    _check_hecke(sym, doc["verified_hecke"])
    if fricke_sign(sym) != -int(doc["fricke_eps"]):
        raise ValueError("involution sign does not match the stored value")
    lam1 = normalize_unit_scale(sym)
    if lam1 != _pair_frac(doc["lambda_p_normalized"]):
        raise ValueError("first-stage normalization does not reproduce the file")
    if doc["lambda_pinned"] is not None:
        sym.lambda_pinned = _pair_frac(doc["lambda_pinned"])
    sym.pin_note = doc.get("pin_note", "")
    if ctx is not None:
        if ctx.root_number == 0:
            ctx.root_number = -int(doc["fricke_eps"])
        elif ctx.root_number != -int(doc["fricke_eps"]):
            raise ValueError("root number disagrees with the stored sign")
        if verify_pin:
            stored = sym.lambda_pinned
            sym.lambda_pinned = None
            recomputed = normalize_pinned(sym, ctx)
            if recomputed != stored:
                raise ValueError("absolute pin does not reproduce the file")
            sym.lambda_pinned = stored
    return sym
