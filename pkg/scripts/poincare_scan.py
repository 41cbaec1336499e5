"""Empirical weighted Poincare constants K(lambda) for the weight families.

K(lambda) = (lambda^2/2) min over angular modes l <= l_max of the spectral gap.
Weight B is scanned from the potential threshold upwards and annotated with
min_r V / 2, the lower bound that the ground-state argument predicts.
"""

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from hyplab.spectral import locate_threshold, poincare_constant_scan, potential_scan


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--points", type=int, default=16)
    ap.add_argument("--l-max", type=int, default=2)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    rows = []
    with ProcessPoolExecutor() as pool:
        for N in args.dims:
            beta_star = locate_threshold(N)
            grids = {"A": np.geomspace(0.05, 3.0, args.points),
                     "A_tanh": np.geomspace(0.05, 50.0, args.points),
                     "B": np.geomspace(beta_star, 20 * beta_star, args.points)}
            for kind, grid in grids.items():
                scan = poincare_constant_scan(kind, grid, N, l_max=args.l_max, executor=pool)
                for e in scan.entries:
                    half_min_v = potential_scan(e.lam, N)[0] / 2 if kind == "B" else float("nan")
                    rows.append({"N": N, "weight": kind, "lambda": e.lam, "K": e.K, "argmin_l": e.argmin_l,
                                 "valid": e.valid, "max_delta": e.max_delta, "half_min_V": half_min_v,
                                 "beta_star": beta_star})
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
