"""Variance of the momentum potential Phi_2(0, t) from quadrature and from a Gibbs ensemble."""
import argparse

import numpy as np

from lattice_corr import ChainModel, CouplingVector, localized_square_root
from lattice_corr.dynamics import gibbs_sample, harmonic_propagate
from lattice_corr.hierarchy import normality_check, potential_trace, variance_integrals


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--t", type=float, default=50.0)
    args = ap.parse_args()

    for t in (10.0, 100.0, 400.0):
        s1, s2 = variance_integrals(0, t, 1.0, 1.0)
        print(f"t={t:6.1f}  sigma1^2={s1:.4f}  sigma2^2={s2:.4f}  sigma2^2/t={s2 / t:.5f}")

    c = CouplingVector((1.0,))
    sq = localized_square_root(c)
    st = gibbs_sample(ChainModel(c), 301, rng=np.random.default_rng(0), size=args.samples)
    dt = 0.1
    traj = (harmonic_propagate(st, n * dt, sq) for n in range(int(round(args.t / dt)) + 1))
    x = potential_trace(traj, 0, sq).phi[1, -1]
    rep = normality_check(x)
    s2 = variance_integrals(0, args.t, 1.0, 1.0)[1]
    # the ring has no k = 0 mode, which removes t^2 kappa / (N beta) from the variance
    ring = s2 - args.t**2 / st.N
    print(f"ensemble t={args.t}: var={x.var(ddof=1):.3f}; infinite chain {s2:.3f}, ring of {st.N} sites {ring:.3f}")
    print(f"skew={rep.skewness:+.3f} excess kurtosis={rep.excess_kurtosis:+.3f}")


if __name__ == "__main__":
    main()
