#!/usr/bin/env python3
"""Annealer cost against the adiabatic 1/g_min^2 over an (alpha, c) grid.

Each grid cell anneals several replicas at the smallest valid sizes and
reports the mean sweep total over the critical s window next to the exact
minimum gap, plus the pooled log-log correlation coefficient.  This is the
long-running study; budget an hour with the default settings.
"""

import argparse
import sys

from barrier_qmc import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/sweeps_vs_gap.csv")
    ap.add_argument("--config", default=None,
                    help="optional manifest overriding the defaults below")
    ap.add_argument("--replicas", type=int, default=3)
    ap.add_argument("--n-per-cell", type=int, default=4)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    argv = ["correlate"]
    if args.config:
        argv += ["--config", args.config]
    else:
        argv += ["--alpha", "0.3,0.4", "--c", "1,2,3",
                 "--n-min", "100", "--n-max", "2000"]
    argv += ["--n-per-cell", str(args.n_per_cell),
             "--replicas", str(args.replicas),
             "--out", args.out]
    if args.workers:
        argv += ["--workers", str(args.workers)]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
