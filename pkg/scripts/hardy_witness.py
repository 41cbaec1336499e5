"""Approach of the Hardy quotient to (N-2)^2/4 along rho^{(2-N)/2+1/k} times a cutoff.

Compares the log-scale cutoff with a cutoff that is smooth in rho, which makes
the cutoff's own gradient energy visible.  Writes CSV to stdout or --out.
"""

import argparse
import csv
import sys

from hyplab.acceptance import hardy_witness
from hyplab.identity import hardy_ratio
from hyplab.profiles import bump, log_bump


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--ks", type=int, nargs="+", default=[2, 5, 10, 20, 40, 80])
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    cutoffs = {"log_bump": log_bump(1e-6, 1.0), "bump": bump(1e-3, 1.0)}
    rows = []
    for N in args.dims:
        const = (N - 2) ** 2 / 4.0
        for k in args.ks:
            for name, cut in cutoffs.items():
                ratio = hardy_ratio(hardy_witness(N, k, cut), N)
                rows.append({"N": N, "k": k, "cutoff": name, "ratio": ratio, "constant": const,
                             "excess": ratio / const - 1.0})
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
