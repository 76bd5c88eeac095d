#!/usr/bin/env python3
"""Generate the synthetic census-style CSV used by the other scripts."""
import argparse
import os

from otfair import synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/census.csv")
    ap.add_argument("--rows", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    synthetic.write_csv(args.out, args.rows, seed=args.seed)
    print(args.out)


if __name__ == "__main__":
    main()
