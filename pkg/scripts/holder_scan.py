"""Fitted Hölder constant of the elimination map for several gamma and pair counts."""

import argparse

from cftransfer.suite import holder_schedule
from cftransfer.transference import empirical_holder, odd_annulus_sampler


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=21)
    ap.add_argument("--pairs", type=int, default=500)
    ap.add_argument("--gammas", default="0.5,0.9,0.99")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sched = holder_schedule()
    sampler = odd_annulus_sampler(sched.t, sched.L, sched.d)
    print(f"M = {sched.M}, W_1 = {sched.W[0]}")
    for g in (float(x) for x in args.gammas.split(",")):
        rep = empirical_holder(sched, sampler, args.depth, g, args.pairs, seed=args.seed)
        print(f"gamma={g:.2f}  C(n/2)={rep.C_half:.6g}  C(n)={rep.C:.6g}  rel_change={rep.rel_change:.2e}")


if __name__ == "__main__":
    main()
