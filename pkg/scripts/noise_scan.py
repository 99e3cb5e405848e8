#!/usr/bin/env python3
"""Preparation under per-round rotation noise: both axes, a variance grid."""
import argparse

from aklt_mite.cli import main


def run():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", default="4")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sigma2", default="1e-4,1e-3,1e-2")
    p.add_argument("--prefix", default="noise")
    args = p.parse_args()
    for axis in ("z", "x"):
        for s2 in args.sigma2.split(","):
            code = main([
                "noise", "--n", args.n, "--runs", str(args.runs), "--seed", str(args.seed),
                "--noise-axis", axis, "--sigma2", s2,
                "--out", f"{args.prefix}_{axis}_{s2}.csv",
            ])
            if code != 0:
                return code
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
