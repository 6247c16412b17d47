"""Regenerate the p0, pn and mean figures (SVG + CSV) for the default sweep.

Usage: python3 scripts/reproduce_figures.py [--out-dir out] [--replications 3000] [--workers 1]
"""

import argparse
import sys

from ksqueue.cli import main


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--replications", type=int, default=3000)
    ap.add_argument("--routes", default="SpectralKS,MC")
    args = ap.parse_args(argv)
    for fig in ("p0", "pn", "mean"):
        code = main(["figures", fig, "--out-dir", args.out_dir,
                     "--replications", str(args.replications), "--routes", args.routes])
        if code:
            return code
        print(f"{fig}: written to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
