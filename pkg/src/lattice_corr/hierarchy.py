"""Conserved charges, local currents and potential functions of the harmonic chain.

The charges are built from the circulants ``G_k`` (generated by
``(e_k + e_{N-k})/2``) and ``S_k`` (generated by ``(e_k - e_{N-k})/2``):

    even:  H_k = p^T G_k p / 2 + q^T T^T G_k T q / 2,   0 <= k <= (N-1)/2,
    odd:   p^T T^T S_k T q,                              1 <= k <= (N-1)/2.

Local densities are ``(p_j p_{j+k} + r_j r_{j+k})/2`` (even) and
``(T p)_j (r_{j+k} - r_{j-k})`` (odd).  The odd density carries no factor 1/2,
so its site sum equals ``2 p^T T^T S_k T q``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_simpson

from ._quad import panel_rule
from .circulant import CouplingVector, LocalSquareRoot, elongation
from .correlations import hierarchy_correlation as _pair_correlation
from .dispersion import frequency
from .dynamics import ChainState, NonlinearModel, nonlinear_energy
from .errors import InsufficientSamples, RangeError

__all__ = [
    "ChargeSpec",
    "CurrentTriple",
    "PotentialTrace",
    "charge_density",
    "charge_value",
    "conservation_check",
    "currents",
    "time_derivatives",
    "potential_trace",
    "variance_integrals",
    "charge_correlation",
    "NormalityReport",
    "normality_check",
]


@dataclass(frozen=True)
class ChargeSpec:
    """Charge ``G_k`` (``kind='even'``) or ``S_k`` (``kind='odd'``)."""

    k: int
    kind: str = "even"

    def __post_init__(self):
        if self.kind not in ("even", "odd"):
            raise ValueError(f"kind must be 'even' or 'odd', got {self.kind!r}")
        if self.k < (0 if self.kind == "even" else 1):
            raise IndexError(f"invalid {self.kind} charge index {self.k}")

    @classmethod
    def from_index(cls, index: int, N: int) -> "ChargeSpec":
        """Map the flat index ``0..N-1`` of the complete family to ``(k, kind)``."""
        M = (N - 1) // 2
        if not 0 <= index <= N - 1:
            raise IndexError(f"charge index {index} outside [0, {N - 1}]")
        if index <= M:
            return cls(index, "even")
        return cls(index - M, "odd")

    def check(self, N: int) -> None:
        if self.k > (N - 1) // 2:
            raise IndexError(f"charge index k={self.k} exceeds (N-1)/2 = {(N - 1) // 2}")


@dataclass(frozen=True)
class CurrentTriple:
    jr: np.ndarray
    jp: np.ndarray
    je: np.ndarray


@dataclass(frozen=True)
class PotentialTrace:
    """``phi[a, n, ...]``: potential of field ``a`` (0: r, 1: p, 2: e) at ``times[n]``."""

    times: np.ndarray
    phi: np.ndarray
    j: int


def _shift(x, a):
    """``y_j = x_{j+a}`` along the last axis."""
    return np.roll(x, -a, axis=-1)


def charge_density(spec: ChargeSpec, state: ChainState, sq: LocalSquareRoot) -> np.ndarray:
    spec.check(state.N)
    p, r = state.p, state.r
    k = spec.k
    if spec.kind == "even":
        return 0.5 * (p * _shift(p, k) + r * _shift(r, k))
    Tp = elongation(p, sq)
    return Tp * (_shift(r, k) - _shift(r, -k))


def charge_value(spec: ChargeSpec, state: ChainState, sq: LocalSquareRoot) -> np.ndarray:
    return charge_density(spec, state, sq).sum(axis=-1)


def conservation_check(spec: ChargeSpec, trajectory: Iterable[ChainState], sq: LocalSquareRoot,
                       model: NonlinearModel | None = None) -> float:
    """``max_t |H(t) - H(0)| / max(1, |H(0)|)`` along a trajectory.

    With a nonlinear ``model`` and ``k = 0`` (even) the full nonlinear energy is
    monitored instead of the quadratic charge.
    """
    if model is not None and spec == ChargeSpec(0, "even"):
        def value(st):
            return nonlinear_energy(st.p, st.q, model)
    else:
        def value(st):
            return charge_value(spec, st, sq)
    it = iter(trajectory)
    h0 = np.asarray(value(next(it)))
    scale = np.maximum(1.0, np.abs(h0))
    drift = 0.0
    for st in it:
        drift = max(drift, float(np.max(np.abs(value(st) - h0) / scale)))
    return drift


def time_derivatives(state: ChainState, sq: LocalSquareRoot) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Harmonic equations of motion for ``(r, p, e)``: ``r' = T p``, ``p' = -T^T r``."""
    tau = sq.tau
    rdot = elongation(state.p, sq)
    pdot = np.zeros_like(state.r)
    for s, t in enumerate(tau):
        pdot -= t * _shift(state.r, -s)
    edot = state.p * pdot + state.r * rdot
    return rdot, pdot, edot


def currents(state: ChainState, sq: LocalSquareRoot) -> CurrentTriple:
    """Local currents with ``u_j' = J_j - J_{j-1}`` for ``u = r, p, e``."""
    tau = np.asarray(sq.tau)
    m = sq.m
    p, r = state.p, state.r
    tail = np.cumsum(tau[::-1])[::-1]  # tail[s] = sum_{l >= s} tau_l
    jr = np.zeros_like(p)
    for s in range(m):
        jr += tail[s + 1] * _shift(p, 1 + s)
    jp = np.zeros_like(r)
    for s in range(1, m + 1):
        jp += tail[s] * _shift(r, 1 - s)
    je = np.zeros_like(p)
    for s in range(1, m + 1):
        acc = np.zeros_like(p)
        for l in range(s):
            acc += _shift(r, 1 - s + l) * _shift(p, 1 + l)
        je += tau[s] * acc
    return CurrentTriple(jr, jp, je)


def _fields(state: ChainState):
    return np.stack([state.r, state.p, 0.5 * (state.p**2 + state.r**2)])


def _prefix(u0: np.ndarray, j: int) -> np.ndarray:
    """``sum_{l=0}^{j} u_l`` with the convention ``-sum_{l=j+1}^{-1}`` for ``j < 0``."""
    N = u0.shape[-1]
    if j >= 0:
        idx = np.arange(j + 1) % N
        return u0[..., idx].sum(-1)
    idx = np.arange(j + 1, 0) % N
    return -u0[..., idx].sum(-1)


def potential_trace(trajectory: Iterable[ChainState], j: int, sq: LocalSquareRoot) -> PotentialTrace:
    """Potential ``Phi(j, t) = int_0^t J(j, t') dt' + sum_{l<=j} u(l, 0)`` along a uniform trajectory.

    The time integral uses the cumulative composite Simpson rule on the
    trajectory samples.
    """
    times, J = [], []
    u_init = None
    for st in trajectory:
        if u_init is None:
            u_init = _fields(st)
        cur = currents(st, sq)
        J.append(np.stack([cur.jr[..., j % st.N], cur.jp[..., j % st.N], cur.je[..., j % st.N]]))
        times.append(st.time)
    if len(times) < 3:
        raise InsufficientSamples(f"need at least 3 time samples, got {len(times)}")
    times = np.asarray(times)
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
        raise ValueError("trajectory must be uniformly sampled")
    J = np.stack(J, axis=1)  # (3, n_t, ...)
    integral = cumulative_simpson(J, dx=steps[0], axis=1, initial=0.0)
    base = _prefix(u_init, j)  # (3, ...)
    return PotentialTrace(times, integral + base[:, None], j)


def variance_integrals(j: int, t: float, kappa1: float, beta: float,
                       coupling: CouplingVector | None = None) -> tuple[float, float]:
    """Limit variances ``(sigma_1^2, sigma_2^2)`` of the nearest-neighbour potentials.

    Uses ``(1 - cos f t)/f^2 = (t^2/2) sinc^2(f t / 2 pi)`` and, for the extra
    term of ``sigma_1^2``, ``(1 - cos 2 pi (j+1) k)/f^2 = (sin(pi (j+1) k)/sin(pi k))^2/(2 kappa_1)``;
    both are finite at ``k = 0``.
    """
    if coupling is not None and coupling.m != 1:
        raise RangeError(f"variance integrals are derived for m = 1, got m = {coupling.m}")
    if kappa1 <= 0 or beta <= 0:
        raise ValueError("kappa1 and beta must be positive")
    c = CouplingVector((kappa1,))
    n = int(np.ceil(8 * (np.sqrt(kappa1) * abs(t) + abs(j + 1)))) + 16
    k, w = panel_rule(n)
    f = frequency(k, c)
    x = 2 * np.pi * (j + 1) * k
    damp = 0.5 * t**2 * np.sinc(f * t / (2 * np.pi)) ** 2
    fejer = (np.sin(np.pi * (j + 1) * k) / np.sin(np.pi * k)) ** 2 / (2 * kappa1)
    common = np.dot(w, damp * np.cos(x))
    s1 = 2 * kappa1 / beta * (common + np.dot(w, fejer))
    s2 = 2 * kappa1 / beta * common + (j + 1) / beta
    return float(s1), float(s2)


def charge_correlation(a: ChargeSpec, b: ChargeSpec, j: int, t: float, c: CouplingVector, sq: LocalSquareRoot,
                       beta: float) -> float:
    """Limit covariance ``<e^(a)_j(t) e^(b)_0(0)>`` of two charge densities."""
    return _pair_correlation(a.k, b.k, j, t, c, sq, beta, kind_k=a.kind, kind_n=b.kind)


@dataclass(frozen=True)
class NormalityReport:
    skewness: float
    excess_kurtosis: float
    passed: bool


def normality_check(samples, max_skew: float = 0.1, max_kurtosis: float = 0.2) -> NormalityReport:
    """Moment test for Gaussianity: ``|skewness| <= max_skew`` and ``|excess kurtosis| <= max_kurtosis``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 8:
        raise InsufficientSamples(f"need at least 8 samples, got {x.size}")
    g1 = float(stats.skew(x))
    g2 = float(stats.kurtosis(x))
    return NormalityReport(g1, g2, abs(g1) <= max_skew and abs(g2) <= max_kurtosis)
