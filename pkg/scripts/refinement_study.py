"""Mesh refinement of the relaxation residual D^{a,g}E + theta*E on graded meshes.

The residual should shrink by a roughly constant factor each time the mesh doubles.
"""

import argparse

import numpy as np

from ksqueue.fracops import MeshSpec, relaxation_residual
from ksqueue.specfun import KSParams


def run(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", default="0.8,0.2;0.6,0.2")
    ap.add_argument("--theta", type=float, default=0.2)
    ap.add_argument("--t-max", type=float, default=10.0)
    ap.add_argument("--sizes", default="256,512,1024,2048,4096")
    args = ap.parse_args(argv)
    sizes = [int(n) for n in args.sizes.split(",")]
    for item in args.pairs.split(";"):
        a, g = (float(v) for v in item.split(","))
        ks = KSParams(a, g)
        res = np.array([relaxation_residual(ks, args.theta, MeshSpec(0.1, args.t_max, n)).max_residual
                        for n in sizes])
        print(f"alpha={a:g} gamma={g:g}")
        print(f"{'n':>6} {'max residual':>14} {'ratio':>7} {'order':>6}")
        for i, n in enumerate(sizes):
            if i == 0:
                print(f"{n:6d} {res[i]:14.4e}")
            else:
                r = res[i - 1] / res[i]
                print(f"{n:6d} {res[i]:14.4e} {r:7.3f} {np.log2(r):6.3f}")


if __name__ == "__main__":
    run()
