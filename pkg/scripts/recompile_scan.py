#!/usr/bin/env python3
"""Recompilation fidelity vs circuit depth (100 repetitions per depth)."""
import argparse

from aklt_mite.cli import main


def run():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--layers", default="1,2,3,4,5,6,7")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="recompile_scan.csv")
    args = p.parse_args()
    return main([
        "recompile", "--layers", args.layers, "--reps", str(args.reps),
        "--seed", str(args.seed), "--out", args.out,
    ])


if __name__ == "__main__":
    raise SystemExit(run())
