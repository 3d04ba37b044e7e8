"""Sound front of the nearest-neighbour chain against its Airy parametrix.

Prints S11 near j = v0 t for a few times and the maximum deviation in the
window |j - v0 t| <= 3 lambda0 t^(1/3).
"""
import argparse

import numpy as np

from lattice_corr import CouplingVector, airy_constants, localized_square_root
from lattice_corr.asymptotics import airy_parametrix_block
from lattice_corr.correlations import limit_block


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--preset", default="nn", choices=["nn", "example1", "example2"])
    ap.add_argument("--times", type=float, nargs="+", default=[100.0, 400.0, 1600.0])
    args = ap.parse_args()

    c = CouplingVector.preset(args.preset)
    sq = localized_square_root(c)
    ac = airy_constants(c)
    print(f"v0 = {ac.v0:.6f}  lambda0 = {ac.lambda0:.6f}")
    for t in args.times:
        w = 3 * ac.lambda0 * t ** (1 / 3)
        js = np.arange(int(np.ceil(ac.v0 * t - w)), int(np.floor(ac.v0 * t + w)) + 1)
        ex = limit_block(js, t, c, sq, 1.0)[(1, 1)]
        pa = airy_parametrix_block(js, t, c, 1.0)[(1, 1)]
        i = int(np.argmax(ex))
        print(f"t={t:7.1f}  peak j={js[i]} (v0 t={ac.v0 * t:.1f})  S11={ex[i]:.5f}  "
              f"parametrix={pa[i]:.5f}  max|diff|={np.max(np.abs(ex - pa)):.2e}")


if __name__ == "__main__":
    main()
