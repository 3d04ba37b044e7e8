"""Exact equilibrium correlations of the harmonic chain.

Index convention: ``u(j, t) = (r_j(t), p_j(t), e_j(t))`` and
``S_{aa'}(j, t) = <u_a(j, t) u_a'(0, 0)> - <u_a><u_a'>``.

Two exact routes are provided.  The finite-``N`` route sums over the ``N - 1``
nonzero Fourier modes; the limit route integrates over ``k`` in ``[0, 1]`` with
composite Gauss-Legendre panels resolving the oscillation of
``exp(i (f(k) t +- 2 pi k j))``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._quad import panel_rule
from .circulant import CouplingVector, LocalSquareRoot
from .dataset import CorrelationDataset
from .dispersion import airy_constants, omega_eval
from .errors import DimensionMismatch, QuadratureNonConvergence

__all__ = [
    "CorrelationIndex",
    "limit_block",
    "limit_correlation",
    "finite_block",
    "finite_correlation",
    "correlation_field",
    "charge_terms",
    "hierarchy_correlation",
    "worker_count",
    "MAX_PANELS",
]

MAX_PANELS = 2_000_000
PANELS_PER_PHASE = 8  # panels per 2 pi of phase, i.e. pi/4 per panel
DIRECT_SUM_SITES = 16  # below this many sites the mode sums skip the FFT


@dataclass(frozen=True)
class CorrelationIndex:
    alpha: int
    alphaprime: int
    j: int
    t: float

    def __post_init__(self):
        if self.alpha not in (1, 2, 3) or self.alphaprime not in (1, 2, 3):
            raise ValueError(f"alpha, alphaprime must be in {{1,2,3}}, got {self.alpha}, {self.alphaprime}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")


def worker_count() -> int:
    env = os.environ.get("LATTICE_CORR_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def _panels(c: CouplingVector, t: float, jmax: float) -> int:
    v0 = airy_constants(c).v0
    n = int(np.ceil(PANELS_PER_PHASE * (v0 * abs(t) + abs(jmax)))) + 8
    if n > MAX_PANELS:
        raise QuadratureNonConvergence(
            f"{n} panels needed for t={t}, |j|={jmax} (cap {MAX_PANELS}); use the finite-N or asymptotic route"
        )
    return n


def limit_block(j, t: float, c: CouplingVector, sq: LocalSquareRoot, beta: float) -> dict:
    """Limit correlations ``S_11, S_12, S_21, S_22, S_33`` for an array of sites ``j``.

    Returns a dict keyed by ``(alpha, alphaprime)`` with arrays over ``j``.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    j = np.atleast_1d(np.asarray(j, dtype=float))
    n = _panels(c, t, np.max(np.abs(j)) if j.size else 0.0)
    k, w = panel_rule(n)
    om = omega_eval(k, sq)
    f = np.abs(om)
    cth, sth = om.real / f, om.imag / f
    cft, sft = np.cos(f * t), np.sin(f * t)
    s11 = np.empty(j.size)
    s12 = np.empty(j.size)
    s21 = np.empty(j.size)
    # chunk over j to bound memory
    step = max(1, int(4_000_000 // k.size))
    for lo in range(0, j.size, step):
        jj = j[lo:lo + step]
        ph = 2.0 * np.pi * np.multiply.outer(jj, k)
        cj, sj = np.cos(ph), np.sin(ph)
        s11[lo:lo + step] = (cj * cft) @ w
        # cos(2 pi k j +- theta) = cos cos -+ sin sin
        s12[lo:lo + step] = (cj * (sft * cth) - sj * (sft * sth)) @ w
        s21[lo:lo + step] = -((cj * (sft * cth) + sj * (sft * sth)) @ w)
    s11, s12, s21 = s11 / beta, s12 / beta, s21 / beta
    out = {(1, 1): s11, (2, 2): s11.copy(), (1, 2): s12, (2, 1): s21}
    out[(3, 3)] = 0.5 * (2 * s11**2 + s12**2 + s21**2)
    return out


def limit_correlation(idx: CorrelationIndex, c: CouplingVector, sq: LocalSquareRoot, beta: float) -> float:
    if (idx.alpha == 3) != (idx.alphaprime == 3):
        return 0.0
    return float(limit_block([idx.j], idx.t, c, sq, beta)[(idx.alpha, idx.alphaprime)][0])


def _check_N(N: int, m: int):
    if N % 2 == 0 or N <= 2 * m:
        raise DimensionMismatch(f"N must be odd and > 2m = {2 * m}, got {N}")


def _direct_sums(idx: np.ndarray, N: int, a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """``Re (1/N) sum_l x_l exp(2 pi i l j / N)`` for a few sites, O(N) per site."""
    out = np.zeros((3, idx.size))
    chunk = 1 << 20
    for lo in range(0, N, chunk):
        l = np.arange(lo, min(N, lo + chunk), dtype=np.int64)
        # reduce l*j mod N in integers so the phase stays exact for large N
        e = np.exp(2j * np.pi * (np.multiply.outer(idx.astype(np.int64), l) % N) / N)
        out[0] += (e @ a[lo:lo + chunk]).real
        out[1] += (e @ b[lo:lo + chunk]).real
        out[2] -= (e @ c[lo:lo + chunk]).real
    return out / N


def finite_block(j, t: float, c: CouplingVector, sq: LocalSquareRoot, beta: float, N: int,
                 add_delta: bool = False, s33_offset: bool = False) -> dict:
    """Finite-``N`` correlations ``S^N`` for integer sites ``j`` (any integers, taken mod N).

    ``add_delta`` adds ``delta_{aa'}/(N beta)`` to the r/p entries, which makes them
    comparable with the limit values.  ``S^N_33`` is the exact Gaussian value
    ``(S11^2 + S22^2 + S12^2 + S21^2)/2``; ``s33_offset`` adds the extra
    ``3(N-1)/(2 N^2 beta^2)`` used by the alternative finite-N convention.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    _check_N(N, sq.m)
    j = np.atleast_1d(np.asarray(j, dtype=int))
    om = omega_eval(np.arange(N) / N, sq)
    f = np.abs(om)
    f[0] = 1.0
    phase = om / f
    cft = np.cos(f * t)
    sft = np.sin(f * t)
    cft[0] = sft[0] = 0.0
    idx = np.mod(j, N)
    if idx.size <= DIRECT_SUM_SITES:
        s11, s12, s21 = _direct_sums(idx, N, cft, sft * phase, sft * np.conj(phase))
    else:
        # (1/N) sum_l a_l exp(2 pi i l j / N) == ifft(a)[j]
        s11 = np.fft.ifft(cft).real[idx]
        s12 = np.fft.ifft(sft * phase).real[idx]
        s21 = -np.fft.ifft(sft * np.conj(phase)).real[idx]
    s11, s12, s21 = s11 / beta, s12 / beta, s21 / beta
    s33 = 0.5 * (2 * s11**2 + s12**2 + s21**2)
    if s33_offset:
        s33 = s33 + 3.0 * (N - 1) / (2.0 * N**2 * beta**2)
    if add_delta:
        s11 = s11 + 1.0 / (N * beta)
    return {(1, 1): s11, (2, 2): s11.copy(), (1, 2): s12, (2, 1): s21, (3, 3): s33}


def finite_correlation(idx: CorrelationIndex, c: CouplingVector, sq: LocalSquareRoot, beta: float, N: int,
                       add_delta: bool = False, s33_offset: bool = False) -> float:
    if (idx.alpha == 3) != (idx.alphaprime == 3):
        return 0.0
    blk = finite_block([idx.j], idx.t, c, sq, beta, N, add_delta=add_delta, s33_offset=s33_offset)
    return float(blk[(idx.alpha, idx.alphaprime)][0])


def _auto_N(c: CouplingVector, t: float, jmax: int) -> int:
    v0 = airy_constants(c).v0
    N = int(max(40 * t * v0, 4 * jmax + 1, 101))
    return N + 1 if N % 2 == 0 else N


def correlation_field(alpha: int, alphaprime: int, j_range, t_list, c: CouplingVector, sq: LocalSquareRoot,
                      beta: float, method: str = "exact", N: int | None = None) -> CorrelationDataset:
    """Evaluate one correlation on a ``j x t`` grid.

    ``method`` is ``exact`` (limit integrals), ``finiteN`` (spectral sums, with the
    ``delta/(N beta)`` offset restored) or ``auto`` (exact, switching to finite-N with
    ``N >= 40 v0 t`` when the panel cap is hit).
    """
    CorrelationIndex(alpha, alphaprime, 0, 0.0)
    js = np.asarray(list(j_range), dtype=int)
    ts = [float(t) for t in t_list]
    ds = CorrelationDataset()
    if not ts or js.size == 0:
        return ds
    jmax = int(np.max(np.abs(js)))

    def one(t):
        if (alpha == 3) != (alphaprime == 3):
            return np.zeros(js.size), "exact"
        if method == "exact":
            return limit_block(js, t, c, sq, beta)[(alpha, alphaprime)], "exact"
        if method == "auto":
            try:
                return limit_block(js, t, c, sq, beta)[(alpha, alphaprime)], "exact"
            except QuadratureNonConvergence:
                pass
        if method in ("finiteN", "auto"):
            n = N or _auto_N(c, t, jmax)
            return finite_block(js, t, c, sq, beta, n, add_delta=True)[(alpha, alphaprime)], "finiteN"
        raise ValueError(f"unknown method {method!r}")

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        results = list(ex.map(one, ts))
    for t, (vals, tag) in zip(ts, results):
        for jj, v in zip(js, vals):
            ds.add(alpha, alphaprime, int(jj), t, float(v), 0.0, tag)
    return ds


# charge hierarchy -------------------------------------------------------------

def charge_terms(k: int, kind: str, sq: LocalSquareRoot) -> list[tuple[float, int, int, int, int]]:
    """Bilinear representation of a charge density.

    The density at site ``j`` is ``sum c * u_X(j + a) * u_Y(j + b)`` over the
    returned ``(c, X, a, Y, b)`` with ``X, Y`` in ``{1 (r), 2 (p)}``.

    even: ``(p_j p_{j+k} + r_j r_{j+k}) / 2``;
    odd:  ``(sum_l tau_l p_{j+l}) (r_{j+k} - r_{j-k})``.
    """
    if kind == "even":
        if k < 0:
            raise IndexError(f"even charge index must be >= 0, got {k}")
        return [(0.5, 2, 0, 2, k), (0.5, 1, 0, 1, k)]
    if kind == "odd":
        if k < 1:
            raise IndexError(f"odd charge index must be >= 1, got {k}")
        out = []
        for l, tl in enumerate(sq.tau):
            out.append((tl, 2, l, 1, k))
            out.append((-tl, 2, l, 1, -k))
        return out
    raise ValueError(f"kind must be 'even' or 'odd', got {kind!r}")


def hierarchy_correlation(kidx: int, nidx: int, j: int, t: float, c: CouplingVector, sq: LocalSquareRoot,
                          beta: float, kind_k: str = "even", kind_n: str = "even") -> float:
    """Limit space-time covariance of two charge densities.

    ``<e^(k)_j(t) e^(n)_0(0)> - <e^(k)><e^(n)>`` for the infinite chain.  Both
    densities are quadratic in the Gaussian field ``(r, p)``, so by Wick pairing
    the covariance is a finite sum of products of two-point functions
    ``S_{XX'}(x - y, t)``; this is the exact factorization of the double
    ``k``-integral.
    """
    A = charge_terms(kidx, kind_k, sq)
    B = charge_terms(nidx, kind_n, sq)
    shifts = set()
    for _, X, a, Y, b in A:
        for _, X2, a2, Y2, b2 in B:
            shifts.update({j + a - a2, j + b - b2, j + a - b2, j + b - a2})
    shifts = sorted(shifts)
    blk = limit_block(shifts, t, c, sq, beta)
    pos = {s: i for i, s in enumerate(shifts)}

    def S(x, y, d):
        return blk[(x, y)][pos[d]]

    total = 0.0
    for cA, X, a, Y, b in A:
        for cB, X2, a2, Y2, b2 in B:
            total += cA * cB * (
                S(X, X2, j + a - a2) * S(Y, Y2, j + b - b2) + S(X, Y2, j + a - b2) * S(Y, X2, j + b - a2)
            )
    return float(total)
