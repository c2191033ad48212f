#!/usr/bin/env python3
"""Discrepancy-sum trend along an X ladder.

For each X computes D(Q, X) = sum_{q <= Q} max_{(a,q)=1} |pi_I(X;q,a) -
pi_I(X)/phi(q)| with Q = floor(X^qexp), and reports the normalized ratio
D/pi(X).  A decreasing ratio is the desk-scale signature of the discrepancy
sum growing slower than the prime count.

    python3 scripts/bv_trend.py --xs 1e5,1e6,1e7 --alpha 0.1 --I 0,0.5
"""

from __future__ import annotations

import argparse
import sys

from fracprimes.arith import sieve_primes
from fracprimes.cli import emit_discrepancy_csv
from fracprimes.expsums import FracWindow, bv_discrepancy


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--xs", default="1e5,1e6,1e7",
                    help="comma-separated X ladder")
    ap.add_argument("--qexp", type=float, default=0.3,
                    help="Q = floor(X^qexp)")
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--I", default="0,0.5", help="window as c,d")
    ap.add_argument("--moduli", choices=("all", "prime"), default="all")
    ap.add_argument("--detail-dir", default=None,
                    help="also write one per-q breakdown CSV per X here")
    ap.add_argument("--out", default=None, help="trend CSV path (default stdout)")
    args = ap.parse_args(argv)

    c, d = (float(t) for t in args.I.split(","))
    win = FracWindow(alpha=args.alpha, c=c, d=d)
    xs = [int(float(t)) for t in args.xs.split(",")]

    lines = [f"# command=bv-trend alpha={args.alpha} I=[{c},{d}) "
             f"qexp={args.qexp} moduli={args.moduli}",
             "X,Q,D,pi_I,pi,ratio"]
    for X in xs:
        Q = int(X ** args.qexp)
        rep = bv_discrepancy(X, Q, win, moduli=args.moduli)
        pi = sieve_primes(2, X + 1).count()
        lines.append(f"{X},{Q},{rep.total!r},{rep.pi_I},{pi},"
                     f"{rep.total / pi!r}")
        if args.detail_dir:
            detail = emit_discrepancy_csv(
                rep, {"X": X, "Q": Q, "alpha": args.alpha, "c": c, "d": d,
                      "moduli": args.moduli})
            path = f"{args.detail_dir}/bv_X{X}.csv"
            with open(path, "w") as f:
                f.write(detail)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
