#!/usr/bin/env python3
"""Gap-scaling classification sweep across barrier exponents at c=1.

Writes a summary CSV (one classification per alpha) plus per-alpha residual
files, the data behind the polynomial-to-superpolynomial transition plot.
"""

import argparse
import sys

from barrier_qmc import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/gap_transition.csv")
    ap.add_argument("--n-max", type=int, default=2000,
                    help="desk scale by default; 5000 reproduces the full range")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    argv = ["gap-scaling",
            "--alpha", "0.25,0.30,0.33,0.34,0.40,0.50",
            "--c", "1",
            "--n-min", "100", "--n-max", str(args.n_max),
            "--out", args.out]
    if args.workers:
        argv += ["--workers", str(args.workers)]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
