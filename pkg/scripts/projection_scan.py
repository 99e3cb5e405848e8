#!/usr/bin/env python3
"""Projection-cascade convergence scan: rounds to reach fidelity 0.9 vs N."""
import argparse

from aklt_mite.cli import main


def run():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="projection_scan.csv")
    p.add_argument("--n", default="3,4,5,6,7,8,9")
    p.add_argument("--rounds", type=int, default=15)
    args = p.parse_args()
    return main(["project", "--n", args.n, "--rounds", str(args.rounds), "--out", args.out])


if __name__ == "__main__":
    raise SystemExit(run())
