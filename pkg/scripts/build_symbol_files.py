"""Build the committed eigensymbol files for the two curves whose
conductors are out of native reach in test time.

Each curve's symbol is synthesized from its minimal quadratic twist
partner: the partner's eigenline is extracted natively at its own
(much smaller) level, certified, and the twisted evaluator is then
normalized and certified against the big curve.  The resulting JSON
files ship with the repository and are re-verified on every import.

Run from the repository root:

    python3 scripts/build_symbol_files.py [--out data/symbols]
"""

import argparse
import os
import sys
import time

from kurihara.curve import curve_context, derive_invariants, quadratic_twist
from kurihara.modsym import eigensymbol_for, export_eigensymbol, twisted_eigensymbol

# label -> (a-invariants, twist discriminant, normalization prime p)
CURVES = {
    "196794.bf1": ([1, -1, 0, -672055191, -6705708066275], -3, 5),
    "423801.ci1": ([0, 0, 1, -17034726259173, -27061436852750306309], 21, 5),
}


def build_one(label, ainvs, disc, p, out_dir):
    model = derive_invariants(ainvs)
    partner_model = quadratic_twist(model, disc)
    sign = +1 if disc > 0 else -1
    print(f"[{label}] partner model {partner_model.ainvs}, twist disc {disc}")
    t0 = time.time()
    partner_ctx = curve_context(list(partner_model.ainvs), p, 1)
    partner = eigensymbol_for(partner_ctx, sign=sign)
    print(f"[{label}] partner symbol in {time.time() - t0:.1f}s, "
          f"hecke {partner.verified_hecke}")
    t0 = time.time()
    ctx = curve_context(ainvs, p, 1, label=label)
    sym = twisted_eigensymbol(ctx, partner, disc)
    print(f"[{label}] twisted symbol in {time.time() - t0:.1f}s: "
          f"w={ctx.root_number} lambda_p={sym.lambda_p} "
          f"pinned={sym.lambda_pinned} note={sym.pin_note!r} "
          f"delta_1={sym.evaluate(0, 1)}")
    path = os.path.join(out_dir, f"{label.split('.')[0]}.json")
    export_eigensymbol(sym, path)
    print(f"[{label}] wrote {path} ({os.path.getsize(path)} bytes)")
    return path


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/symbols", help="output directory")
    ap.add_argument("--only", choices=sorted(CURVES), help="build one curve only")
    args = ap.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    for label, (ainvs, disc, p) in sorted(CURVES.items()):
        if args.only and label != args.only:
            continue
        build_one(label, ainvs, disc, p, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
