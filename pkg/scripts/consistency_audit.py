"""Print the cross-route consistency report for several (alpha, gamma) pairs."""

import argparse

from ksqueue.generator import TABLE1_QUEUE
from ksqueue.solver import consistency_report
from ksqueue.specfun import KSParams


def run(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", default="0.8,0.2;0.6,0.2;1,0")
    ap.add_argument("--n-max", type=int, default=200)
    args = ap.parse_args(argv)
    for item in args.pairs.split(";"):
        a, g = (float(v) for v in item.split(","))
        rep = consistency_report(TABLE1_QUEUE, KSParams(a, g), args.n_max, [0.0, 1.0, 5.0, 20.0])
        print(f"== alpha={a:g} gamma={g:g}")
        for line in rep.lines():
            print(line)


if __name__ == "__main__":
    run()
