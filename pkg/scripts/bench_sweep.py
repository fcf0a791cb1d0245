#!/usr/bin/env python3
"""Sweep the matching kernel across strategies and thread counts; CSV to stdout.

Default shape is the full-scale feature grid (60x107 cells, 256 channels,
6420 bank entries, top-20).
"""

import argparse
import sys

from matchprop.matching import CSV_HEADER, benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--h", type=int, default=60)
    parser.add_argument("--w", type=int, default=107)
    parser.add_argument("--c", type=int, default=256)
    parser.add_argument("--bank", type=int, default=6420)
    parser.add_argument("--k", type=int, default=20)
    parser.add_argument("--threads", default="1,2,8", help="comma-separated thread counts")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(CSV_HEADER)
    for strategy in ("naive", "blocked"):
        for threads in (int(t) for t in args.threads.split(",")):
            result = benchmark(
                args.h, args.w, args.c, args.bank, args.k,
                strategy=strategy, threads=threads, repeats=args.repeats,
            )
            print(result.csv_row())
            print(f"# {result.gflops:.1f} GFLOP/s", file=sys.stderr)


if __name__ == "__main__":
    main()
