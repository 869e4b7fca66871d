"""Saturated RSA packing density in one and two dimensions.

    python scripts/rsa_density.py
"""
import argparse
import math

import numpy as np
from scipy import integrate, special

from hardcore_sbd.analysis import packing_fraction
from hardcore_sbd.dynamics import generate_initial
from hardcore_sbd.params import SimParams


def jamming_constant_1d():
    f = lambda t: math.exp(-2.0 * (np.euler_gamma + math.log(t) + special.exp1(t)))  # noqa: E731
    return integrate.quad(f, 0.0, np.inf, limit=400)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--L1", type=float, default=1e4)
    ap.add_argument("--L2", type=float, default=20.0)
    ap.add_argument("--grid", type=float, default=0.05)
    args = ap.parse_args()

    d1 = [packing_fraction(generate_initial("saturated_rsa", 1.0, SimParams(d=1, L=args.L1, seed=s,
                                                                             boundary="free")))
          for s in range(args.seeds)]
    d2 = [packing_fraction(generate_initial("saturated_rsa", 1.0, SimParams(d=2, L=args.L2, seed=s),
                                            rsa_grid=args.grid))
          for s in range(args.seeds)]
    n = args.seeds
    print(f"d=1: {np.mean(d1):.4f} +- {np.std(d1, ddof=1) / math.sqrt(n):.4f}  (constant {jamming_constant_1d():.6f})")
    print(f"d=2: {np.mean(d2):.4f} +- {np.std(d2, ddof=1) / math.sqrt(n):.4f}  (grid {args.grid})")


if __name__ == "__main__":
    main()
