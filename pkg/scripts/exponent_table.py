"""Print s_star, s_sharp and the trace exponent for a list of registry sets."""

import argparse
from fractions import Fraction

from cftransfer.digitset import parse_set
from cftransfer.exponents import describe, lambda_trace, s_sharp, s_star


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("sets", nargs="*", default=["full1", "full2", "diag2", "ck:K=2,d=2", "tail1:N=20"])
    ap.add_argument("--tol", default="1/100")
    args = ap.parse_args()
    tol = Fraction(args.tol)
    for name in args.sets:
        S = parse_set(name)
        print(name)
        for fn in (s_star, s_sharp, lambda_trace):
            print("   ", describe(fn(S, tol)))


if __name__ == "__main__":
    main()
