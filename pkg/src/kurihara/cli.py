"""Command-line front end: batch analysis, single delta values, sieve
listings, and eigensymbol build/export/import.

The analyze pipeline runs curve -> symbol (built natively or imported)
-> sieve -> scan -> prediction and emits a JSON report whose bytes
depend only on the configuration and seed; wall-clock timings go to the
human summary instead so reports stay byte-reproducible.

Exit codes: 0 success; 2 for unusable input or a definitely failed
hypothesis (bad curve data, import verification failure, p dividing a
Tamagawa factor, nontrivial local torsion); 3 for an internal invariant
violation, which means a bug, not bad luck (a nonzero delta of forced
parity, a Hecke recurrence failure).
"""

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from .arith import INF, is_prime, v_p
from .curve import curve_context, curve_hash, save_ap_cache
from .delta import CONSISTENT, collection_json, delta, delta_1, \
    functional_sign_check, scan
from .kolyvagin import modulus_from_int, sieve
from .modsym import eigensymbol_for, export_eigensymbol, import_eigensymbol
from .selmer import FAILED, hypothesis_ledger, parity_check, \
    predict_structure, prediction_json, semilocal_report, \
    tamagawa_conjecture_check

REPORT_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_INVARIANT = 3


class UsageError(Exception):
    pass


def _prime_p(text):
    p = int(text)
    if p < 5 or not is_prime(p):
        raise argparse.ArgumentTypeError(f"p must be a prime >= 5, got {p}")
    return p


def _budget(text):
    """Either a single integer or per-nu entries like '1:500,3:40'."""
    if ":" not in text:
        return int(text)
    out = {}
    for part in text.split(","):
        nu, b = part.split(":")
        out[int(nu)] = int(b)
    return out


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--curve", help="Weierstrass coefficients as a JSON list")
    src.add_argument("--curve-file",
                     help="JSON file with fields 'ainvs' and optional 'label'")
    common.add_argument("--label", default="", help="display label")
    common.add_argument("--p", type=_prime_p, default=5)
    common.add_argument("--k", type=_positive, default=1,
                        help="working p-power precision")
    common.add_argument("--bound", type=_positive, default=200,
                        help="sieve bound for auxiliary primes")
    common.add_argument("--nu-max", type=int, default=2,
                        help="largest number of primes per modulus")
    common.add_argument("--budget", type=_budget, default=40,
                        help="moduli per nu, an int or '1:500,3:40'")
    common.add_argument("--precision-bits", type=_positive, default=96,
                        help="base precision for L-value and period work")
    common.add_argument("--cache-dir", default="",
                        help="directory for a_ell and eigensymbol caches "
                             "(KURIHARA_CACHE overrides)")
    common.add_argument("--import-modsym", default="",
                        help="eigensymbol JSON to import instead of building")
    common.add_argument("--assert-manin", action="store_true",
                        help="assert the Manin constant is prime to p")
    common.add_argument("--assert-surjective", action="store_true",
                        help="assert the mod-p Galois image is full")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for sampled subroutines")
    common.add_argument("--workers", type=_positive, default=1,
                        help="worker processes; results do not depend on it")
    common.add_argument("--json-out", default="",
                        help="write the JSON report here ('-' for stdout)")

    parser = argparse.ArgumentParser(
        prog="kurihara",
        description="Kurihara numbers and the Selmer structure they predict",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common],
                   help="full pipeline: symbol, scan, prediction")
    pd = sub.add_parser("delta", parents=[common],
                        help="one Kurihara number at an explicit modulus")
    pd.add_argument("--n", type=_positive, required=True,
                    help="squarefree modulus (1 for the exact L-ratio)")
    sub.add_parser("sieve", parents=[common],
                   help="list the auxiliary primes up to the bound")
    pm = sub.add_parser("modsym", parents=[common],
                        help="build, export, or import eigensymbol data")
    pm.add_argument("action", choices=["build", "export", "import"])
    pm.add_argument("--sign", type=int, choices=[1, -1], default=1)
    pm.add_argument("--out", default="", help="target path for export")
    return parser


def _load_context(args):
    try:
        if args.curve_file:
            with open(args.curve_file) as fh:
                doc = json.load(fh)
            ainvs = [int(a) for a in doc["ainvs"]]
            label = doc.get("label", "") or args.label
        elif args.curve:
            ainvs = [int(a) for a in json.loads(args.curve)]
            label = args.label
        else:
            raise UsageError("one of --curve / --curve-file is required")
        if len(ainvs) != 5:
            raise UsageError(
                "a curve needs exactly five Weierstrass coefficients")
        cache_dir = os.environ.get("KURIHARA_CACHE") or args.cache_dir
        cache_path = ""
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)
            model_hash = curve_hash_from_ainvs(ainvs)
            cache_path = os.path.join(cache_dir, f"ap_{model_hash}.bin")
        ctx = curve_context(ainvs, args.p, args.k, label=label,
                            cache_path=cache_path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as e:
        raise UsageError(f"unusable curve input: {e}") from e
    return ctx, cache_dir


def curve_hash_from_ainvs(ainvs):
    from .curve import derive_invariants

    return f"{curve_hash(derive_invariants(ainvs)):016x}"


def _acquire_symbol(args, ctx, pool):
    """Imported symbol when a path is given, otherwise a native build."""
    if args.import_modsym:
        sym = import_eigensymbol(args.import_modsym, ctx)
        return sym, f"imported:{os.path.basename(args.import_modsym)}"
    ell_min = pool[0].ell if pool else None
    sym = eigensymbol_for(ctx, ell_min=ell_min,
                          precision_bits=args.precision_bits)
    return sym, "built"


def _frac_json(x):
    f = Fraction(x)
    return {"numerator": int(f.numerator), "denominator": int(f.denominator)}


def _delta_1_json(sym):
    val, vv, tag = delta_1(sym)
    return {
        "value": _frac_json(val),
        "valuation": None if vv == INF else int(vv),
        "normalization": tag,
    }


def _modsym_json(sym, source):
    return {
        "level": sym.N,
        "sign": sym.sign,
        "source": source,
        "lambda_p": _frac_json(sym.lambda_p),
        "lambda_pinned": None if sym.lambda_pinned is None
        else _frac_json(sym.lambda_pinned),
        "pin_note": sym.pin_note,
        "fricke_eps": sym.fricke_eps,
        "verified_hecke": [[q, a] for q, a in sym.verified_hecke],
    }


def _local_data_json(ctx, p):
    return [
        {
            "ell": ell,
            "kodaira": d.kodaira,
            "reduction": d.reduction,
            "tamagawa": d.tamagawa,
            "v_p_tamagawa": int(v_p(d.tamagawa, p)),
        }
        for ell, d in sorted(ctx.local_data.items())
    ]


def _emit(args, report, summary_lines):
    blob = json.dumps(report, sort_keys=True, separators=(",", ":")) + "\n"
    if args.json_out == "-":
        sys.stdout.write(blob)
        return
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(blob)
    for line in summary_lines:
        print(line)


def cmd_analyze(args):
    t_start = time.time()
    ctx, _ = _load_context(args)
    p, k = args.p, args.k
    pool = sieve(ctx, p, 1, args.bound)
    t_sym = time.time()
    try:
        sym, source = _acquire_symbol(args, ctx, pool)
    except (ValueError, ArithmeticError) as e:
        print(f"eigensymbol unavailable: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    t_scan = time.time()
    try:
        coll = scan(sym, ctx, p, k, args.bound, args.nu_max, args.budget)
    except ArithmeticError as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    t_done = time.time()
    save_ap_cache(ctx)

    pred = predict_structure(coll)
    ledger = hypothesis_ledger(ctx, p, assert_manin=args.assert_manin,
                               assert_surjective=args.assert_surjective)
    tamagawa = tamagawa_conjecture_check(coll, ctx)
    parity = (None if coll.ord_estimate is None
              else parity_check(coll, ctx.root_number))
    semilocal = semilocal_report(coll, ctx, assert_manin=args.assert_manin,
                                 assert_surjective=args.assert_surjective,
                                 seed=args.seed)
    pred_doc = prediction_json(pred, ledger)
    pred_doc["rank_conditional_on_finiteness"] = pred.corank

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "curve": {
            "label": ctx.label,
            "ainvs": list(ctx.model.ainvs),
            "conductor": ctx.conductor,
            "hash": f"{curve_hash(ctx.model):016x}",
        },
        "p": p,
        "k": k,
        "config": {
            "bound": args.bound,
            "nu_max": args.nu_max,
            "budget": args.budget if isinstance(args.budget, int)
            else {str(nu): b for nu, b in sorted(args.budget.items())},
            "precision_bits": args.precision_bits,
            "seed": args.seed,
        },
        "root_number": ctx.root_number,
        "local_data": _local_data_json(ctx, p),
        "modsym": _modsym_json(sym, source),
        "delta_1": _delta_1_json(sym),
        "scan": collection_json(coll, ctx.label),
        "tamagawa_check": tamagawa,
        "parity": parity,
        "prediction": pred_doc,
        "semilocal": semilocal,
    }

    d1 = report["delta_1"]
    val = Fraction(d1["value"]["numerator"], d1["value"]["denominator"])
    lines = [
        f"curve {ctx.label or ctx.model.ainvs}  N={ctx.conductor}  "
        f"p={p} k={k}  w={ctx.root_number:+d}",
        f"delta_1 = {val} ({d1['normalization']}), v_{p} = "
        f"{'oo' if d1['valuation'] is None else d1['valuation']}",
        f"ord estimate {coll.ord_estimate}; floor {coll.min_valuation_overall}; "
        f"parity {parity}",
    ]
    if pred.corank is None:
        lines.append(f"prediction: {pred.note}")
    else:
        lines.append(
            f"corank {pred.corank} (rank {pred.corank} conditional on "
            f"finiteness); Sha[{p}^oo] torsion: {pred.torsion_group() or pred.status}")
    lines.append(
        f"Tamagawa check: {tamagawa['status']} "
        f"(sum {tamagawa['sum_tamagawa_valuations']}, "
        f"observed {tamagawa['observed_floor']})")
    if semilocal["status"] == "Isomorphism":
        terms = " + ".join(
            f"E(F_{f['ell']})(x)Z/{p}" for f in semilocal["factors"])
        lines.append(f"semilocal: Sel(Q, E[{p}]) ~ {terms}")
        if semilocal["conditional_on"]:
            lines.append("  conditional on: "
                         + ", ".join(semilocal["conditional_on"]))
    else:
        lines.append(f"semilocal: {semilocal['status']}"
                     + (" (" + ", ".join(semilocal.get("reasons", [])) + ")"
                        if semilocal.get("reasons") else ""))
    worst = {st for st, _ in ledger.values()}
    lines.append("hypotheses: "
                 + "; ".join(f"{name} {st}"
                             for name, (st, _) in sorted(ledger.items())))
    lines.append(
        f"timings: modsym {t_scan - t_sym:.1f}s scan {t_done - t_scan:.1f}s "
        f"total {time.time() - t_start:.1f}s")
    _emit(args, report, lines)
    return EXIT_HYPOTHESIS if FAILED in worst else EXIT_OK


def cmd_delta(args):
    ctx, _ = _load_context(args)
    p, k = args.p, args.k
    pool = sieve(ctx, p, 1, min(args.bound, 20))
    try:
        sym, source = _acquire_symbol(args, ctx, pool)
    except (ValueError, ArithmeticError) as e:
        print(f"eigensymbol unavailable: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    save_ap_cache(ctx)
    if args.n == 1:
        doc = _delta_1_json(sym)
        val = Fraction(doc["value"]["numerator"], doc["value"]["denominator"])
        vv = "oo" if doc["valuation"] is None else doc["valuation"]
        _emit(args, {"schema_version": REPORT_SCHEMA_VERSION, "n": 1,
                     "delta_1": doc},
              [f"delta_1 = {val} ({doc['normalization']}), v_{p} = {vv}"])
        return EXIT_OK
    try:
        m = modulus_from_int(ctx, p, args.n)
    except ValueError as e:
        print(f"inadmissible modulus: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    k_used = min(k, m.i_valuation)
    try:
        kn = delta(sym, m, k_used)
    except ArithmeticError as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    status = functional_sign_check(ctx.root_number, m, kn)
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n": m.n,
        "factors": [q.ell for q in m.primes],
        "k_used": kn.k_used,
        "value": kn.value,
        "valuation": kn.valuation,
        "functional_sign": status,
    }
    _emit(args, doc, [
        f"delta_{m.n} = {kn.value} mod {p}^{kn.k_used} "
        f"(valuation {kn.valuation}, functional sign {status})"])
    return EXIT_OK if status == CONSISTENT else EXIT_INVARIANT


def cmd_sieve(args):
    ctx, _ = _load_context(args)
    pool = sieve(ctx, args.p, 1, args.bound)
    save_ap_cache(ctx)
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "p": args.p,
        "bound": args.bound,
        "primes": [
            {"ell": q.ell, "a_ell": q.a_ell, "k_ell": q.k_ell, "eta": q.eta}
            for q in pool
        ],
    }
    lines = [f"{q.ell}: a_ell={q.a_ell} depth={q.k_ell} eta={q.eta}"
             for q in pool]
    lines.append(f"{len(pool)} primes up to {args.bound}")
    _emit(args, doc, lines)
    return EXIT_OK


def _modsym_cache_path(cache_dir, ctx, sign):
    tag = f"{curve_hash(ctx.model):016x}"
    return os.path.join(cache_dir, f"modsym_{tag}_{'p' if sign > 0 else 'm'}.json")


def cmd_modsym(args):
    ctx, cache_dir = _load_context(args)
    if args.action == "import":
        path = args.import_modsym
        if not path:
            print("import needs --import-modsym PATH", file=sys.stderr)
            return EXIT_HYPOTHESIS
        try:
            sym = import_eigensymbol(path, ctx)
        except (ValueError, ArithmeticError) as e:
            print(f"import rejected: {e}", file=sys.stderr)
            return EXIT_HYPOTHESIS
        print(f"imported level {sym.N} sign {sym.sign:+d}; "
              f"verified T_q for q in "
              f"{[q for q, _ in sym.verified_hecke]}; w = {ctx.root_number:+d}")
        return EXIT_OK
    if not cache_dir:
        print("build/export need --cache-dir (or KURIHARA_CACHE)",
              file=sys.stderr)
        return EXIT_HYPOTHESIS
    path = _modsym_cache_path(cache_dir, ctx, args.sign)
    if args.action == "build":
        sym = eigensymbol_for(ctx, sign=args.sign,
                              precision_bits=args.precision_bits)
        save_ap_cache(ctx)
        export_eigensymbol(sym, path, ainvs=list(ctx.model.ainvs))
        print(f"built and stored {path}")
        return EXIT_OK
    # export: the build must already be cached
    if not os.path.exists(path):
        print(f"nothing cached at {path}; run modsym build first",
              file=sys.stderr)
        return EXIT_HYPOTHESIS
    out = args.out or os.path.basename(path)
    with open(path, "rb") as src, open(out, "wb") as dst:
        dst.write(src.read())
    print(f"exported {out}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {
        "analyze": cmd_analyze,
        "delta": cmd_delta,
        "sieve": cmd_sieve,
        "modsym": cmd_modsym,
    }[args.command]
    try:
        return handler(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
