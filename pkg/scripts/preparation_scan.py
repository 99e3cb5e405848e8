#!/usr/bin/env python3
"""Full-scale preparation curves (100 trajectories each) for several chain lengths."""
import argparse

from aklt_mite.cli import main


def run():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", default="4,6,7,8")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--prefix", default="prepare")
    args = p.parse_args()
    for n in args.sizes.split(","):
        code = main([
            "prepare", "--n", n, "--runs", str(args.runs), "--rounds", str(args.rounds),
            "--seed", str(args.seed), "--threads", str(args.threads),
            "--out", f"{args.prefix}_n{n}.csv",
        ])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
