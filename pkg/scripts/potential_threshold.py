"""Threshold scale beyond which the ground-state potential stays above K.

For each dimension, bisection locates the smallest lambda with min_r V >= K.
The value at lambda = 2 sqrt(N+1)/(N-1) is printed alongside for comparison,
together with the minimum of V over a range of scales.
"""

import argparse
import math

import numpy as np

from hyplab.spectral import locate_threshold, potential_at_zero, potential_scan


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5, 8])
    ap.add_argument("--K", type=float, default=1.0)
    args = ap.parse_args()
    print("N,beta_star,candidate_closed_form,min_V_at_beta_star,V0_at_beta_star")
    for N in args.dims:
        b = locate_threshold(N, args.K)
        guess = 2 * math.sqrt(N + 1) / (N - 1)
        print(f"{N},{b:.10g},{guess:.10g},{potential_scan(b, N)[0]:.6g},{potential_at_zero(b, N):.6g}")
    print()
    print("N,lambda,min_V,argmin_r")
    for N in args.dims:
        for lam in np.geomspace(0.1, 10, 9):
            mv, arg = potential_scan(float(lam), N)
            print(f"{N},{lam:.4g},{mv:.6g},{arg:.4g}")


if __name__ == "__main__":
    main()
