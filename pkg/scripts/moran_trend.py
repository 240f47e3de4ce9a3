"""Moran lower-bound ratios of a seed fractal against the predicted limit d/(2 alpha).

Example: python scripts/moran_trend.py --set full2 --t 10 --L 2 --alpha 1 --levels 6
"""

import argparse

from cftransfer.digitset import parse_set
from cftransfer.moran import SeedParams, moran_lower_bound, seed_moran_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--set", default="full2")
    ap.add_argument("--t", default="10")
    ap.add_argument("--L", default="2")
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--levels", type=int, default=6)
    args = ap.parse_args()
    p = SeedParams(args.t, args.L, parse_set(args.set))
    spec = seed_moran_spec(p, args.alpha, args.levels)
    rep = moran_lower_bound(spec, args.levels)
    print(f"predicted limit {spec.meta['predicted_limit']:.4f}")
    for row in rep.rows:
        print(f"n={row.n:3d}  ratio={row.ratio:.6f}  tail_min={row.tail_min:.6f}")


if __name__ == "__main__":
    main()
