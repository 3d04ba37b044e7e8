"""Slow t^(-1/4) peaks from degenerate stationary points (Example 1 and 2 couplings)."""
import numpy as np

from lattice_corr import CouplingVector, find_degenerate_points, localized_square_root
from lattice_corr.correlations import finite_block, limit_block
from lattice_corr.dataset import loglog_slope


def main():
    ts = [200.0, 400.0, 800.0, 1600.0]

    c = CouplingVector.preset("example1")
    sq = localized_square_root(c)
    env = []
    for t in ts:
        tt = np.linspace(t, t + np.pi, 40)
        env.append(max(abs(limit_block([0], x, c, sq, 1.0)[(1, 1)][0]) for x in tt))
    print("example1: central peak envelope", np.round(env, 5), f"slope {loglog_slope(ts, env):.3f}")

    c = CouplingVector.preset("example2")
    sq = localized_square_root(c)
    for p in find_degenerate_points(c):
        print(f"example2: k*={p.kstar:.10f}  v*={p.vstar:.6f}  lambda*={p.lambdastar:.5f}")
    p = [p for p in find_degenerate_points(c) if p.kstar < 0.5][0]
    mags = []
    for t in ts:
        N = int(40 * t * 1.55) | 1
        js = np.arange(0, int(1.7 * t))
        s = np.abs(finite_block(js, t, c, sq, 1.0, N, add_delta=True)[(1, 1)])
        win = np.abs(js - p.vstar * t) <= 3 * p.lambdastar * t**0.25 + 2
        mags.append(s[win].max())
        print(f"t={t:6.0f}  largest |S11| at j/t={js[np.argmax(s)] / t:.4f}")
    print("example2: interior peak", np.round(mags, 5), f"slope {loglog_slope(ts, mags):.3f}")


if __name__ == "__main__":
    main()
