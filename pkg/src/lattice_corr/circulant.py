"""Banded circulant matrices and the localized square root of the interaction matrix.

The interaction matrix ``A`` of a chain with springs ``kappa_1..kappa_m`` is the
symmetric circulant generated by ``(a_0, a_1, ..., a_m, 0, ..., 0, a_m, ..., a_1)``
with ``a_0 = 2 sum(kappa)`` and ``a_s = -kappa_s``.  A banded circulant ``T``
generated by ``(tau_0, ..., tau_m, 0, ..., 0)`` with ``T^T T = A`` is obtained from
a spectral (Fejer-Riesz) factorization of the Laurent polynomial

    l(z) = a_0 - sum_s kappa_s (z^s + z^-s).

Conventions: a circulant ``C`` with generator ``c`` has entries
``C[k, j] = c[(j - k) mod N]`` so that ``(C x)_k = sum_s c_s x_{k+s}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidCoupling,
    NonRealCoefficient,
    RootClassificationError,
)

__all__ = [
    "CouplingVector",
    "PhysicalGenerator",
    "LocalSquareRoot",
    "PRESETS",
    "interaction_generator",
    "localized_square_root",
    "closed_form_square_root",
    "expand_generator",
    "apply_circulant",
    "circulant_matrix",
    "elongation",
    "factorization_residual",
    "random_coupling",
]

# root classification tolerances
AT_ONE_TOL = 1e-7
ON_CIRCLE_TOL = 1e-9
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class CouplingVector:
    """Spring constants ``kappa_1..kappa_m`` of a range-``m`` harmonic chain."""

    kappa: tuple[float, ...]

    def __post_init__(self):
        kappa = tuple(float(k) for k in np.atleast_1d(np.asarray(self.kappa, dtype=float)))
        object.__setattr__(self, "kappa", kappa)
        if len(kappa) < 1:
            raise InvalidCoupling("need at least one coupling (m >= 1)")
        if not all(np.isfinite(kappa)):
            raise InvalidCoupling(f"couplings must be finite, got {kappa}")
        if kappa[0] <= 0:
            raise InvalidCoupling(f"kappa_1 must be > 0, got {kappa[0]}")
        if kappa[-1] <= 0:
            raise InvalidCoupling(f"kappa_m must be > 0, got {kappa[-1]}")
        if any(k < 0 for k in kappa[1:-1]):
            raise InvalidCoupling(f"intermediate couplings must be >= 0, got {kappa}")

    @property
    def m(self) -> int:
        return len(self.kappa)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.kappa, dtype=float)

    def moment(self, power: int) -> float:
        """``sum_s s**power * kappa_s``."""
        s = np.arange(1, self.m + 1, dtype=float)
        return float(np.sum(s**power * self.as_array()))

    @classmethod
    def preset(cls, name: str) -> "CouplingVector":
        try:
            return cls(PRESETS[name])
        except KeyError:
            raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


PRESETS: dict[str, tuple[float, ...]] = {
    "nn": (1.0,),
    # kappa_s = 1/s**2 with m = 2: f''(1/2) = 0
    "example1": (1.0, 0.25),
    # degenerate stationary point at k* = 1/3
    "example2": (1.0, 1.0 / 8.0, 7.0 / 72.0),
}


@dataclass(frozen=True)
class PhysicalGenerator:
    """Nonzero half ``a_0..a_m`` of the symmetric generator of ``A``."""

    a: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.a) - 1


@dataclass(frozen=True)
class LocalSquareRoot:
    """Generator ``tau_0..tau_m`` of the banded circulant ``T`` with ``T^T T = A``."""

    tau: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(float(t) for t in self.tau))

    @property
    def m(self) -> int:
        return len(self.tau) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.tau, dtype=float)

    def first_moment(self) -> float:
        """``sum_s s * tau_s``; equals the sound speed ``v_0``."""
        return float(np.dot(np.arange(self.m + 1), self.as_array()))

    def generator(self, N: int) -> np.ndarray:
        return expand_generator(self.tau, N, symmetric=False)


def interaction_generator(c: CouplingVector) -> PhysicalGenerator:
    kappa = c.as_array()
    return PhysicalGenerator((float(2.0 * kappa.sum()),) + tuple(float(-k) for k in kappa))


def _spectral_polynomial(c: CouplingVector) -> np.ndarray:
    """Coefficients of ``P(z) = z^m l(z)`` (degree 2m, palindromic)."""
    kappa = c.as_array()
    a0 = 2.0 * kappa.sum()
    return np.concatenate([-kappa[::-1], [a0], -kappa])


def localized_square_root(c: CouplingVector) -> LocalSquareRoot:
    """Fejer-Riesz factor of ``l(z)`` with all zeros on or outside the unit circle.

    ``P(z)`` always has a double zero at ``z = 1`` (``l(1) = l'(1) = 0`` and
    ``l''(1) = -2 sum s^2 kappa_s != 0``); it is divided out exactly before the
    remaining zeros are computed from the companion matrix.  The zeros come in
    pairs ``xi, 1/xi``; the factor keeps the ones with ``|xi| > 1``.
    """
    m = c.m
    P = _spectral_polynomial(c)
    # synthetic division by (z - 1)^2
    R = P[::-1]
    for _ in range(2):
        R, _rem = np.polydiv(R, [1.0, -1.0])
    roots = np.roots(R) if R.size > 1 else np.empty(0, dtype=complex)

    dist_one = np.abs(roots - 1.0)
    near_one = dist_one <= AT_ONE_TOL
    on_circle = (np.abs(np.abs(roots) - 1.0) <= ON_CIRCLE_TOL) & ~near_one
    if np.any(on_circle):
        raise RootClassificationError(
            f"roots {roots[on_circle]} lie on the unit circle away from z=1; "
            f"couplings {c.kappa} are numerically degenerate"
        )
    n_one = 2 + int(near_one.sum())
    if n_one % 2:
        raise RootClassificationError(f"odd multiplicity {n_one} of the root z=1")
    rho = n_one // 2
    outside = roots[~near_one & (np.abs(roots) > 1.0)]
    if outside.size != m - rho:
        raise RootClassificationError(
            f"expected {m - rho} roots outside the unit circle, found {outside.size}"
        )
    order = np.lexsort((outside.imag, outside.real))
    factors = np.concatenate([np.ones(rho, dtype=complex), outside[order]])

    s = np.poly(factors)[::-1] if factors.size else np.ones(1)
    s = np.asarray(s, dtype=complex)
    if np.max(np.abs(s.imag)) > IMAG_TOL * np.linalg.norm(s):
        raise NonRealCoefficient(f"imaginary residue {np.max(np.abs(s.imag)):.3e} in factor")
    s = s.real
    a0 = P[m]
    d = np.sqrt(a0 / np.dot(s, s))
    tau = d * s
    if np.dot(np.arange(m + 1), tau) < 0:
        tau = -tau
    return LocalSquareRoot(tuple(tau))


def closed_form_square_root(c: CouplingVector) -> LocalSquareRoot:
    """Explicit square roots available for ``m = 1`` and ``m = 2``."""
    k = c.kappa
    if c.m == 1:
        r = np.sqrt(k[0])
        return LocalSquareRoot((-r, r))
    if c.m == 2:
        r1 = np.sqrt(k[0])
        r2 = np.sqrt(k[0] + 4.0 * k[1])
        return LocalSquareRoot((-0.5 * r1 - 0.5 * r2, r1, -0.5 * r1 + 0.5 * r2))
    raise ValueError("closed forms exist only for m <= 2")


def _check_size(N: int, m: int) -> None:
    if N <= 2 * m:
        raise DimensionMismatch(f"need N > 2m = {2 * m}, got N = {N}")
    if N % 2 == 0:
        raise DimensionMismatch(f"N must be odd, got {N}")


def expand_generator(short: Sequence[float], N: int, symmetric: bool) -> np.ndarray:
    """Length-``N`` generator from its first ``m+1`` entries.

    ``symmetric=True`` builds the m-physical (symmetric) pattern used for ``A``,
    otherwise the half-m-physical (zero padded) pattern used for ``T``.
    """
    short = np.asarray(short, dtype=float)
    m = short.size - 1
    _check_size(N, m)
    gen = np.zeros(N)
    gen[: m + 1] = short
    if symmetric and m > 0:
        gen[N - m:] = short[1:][::-1]
    return gen


def apply_circulant(gen, x, method: str = "banded") -> np.ndarray:
    """``y_k = sum_j gen[(j - k) mod N] x_j`` along the last axis of ``x``."""
    gen = np.asarray(gen, dtype=float)
    x = np.asarray(x, dtype=float)
    N = gen.shape[-1]
    if gen.ndim != 1 or x.shape[-1] != N:
        raise DimensionMismatch(f"generator length {N} does not match x shape {x.shape}")
    if method == "banded":
        y = np.zeros(np.broadcast_shapes(x.shape), dtype=float)
        for s in np.flatnonzero(gen):
            y += gen[s] * np.roll(x, -s, axis=-1)
        return y
    if method == "fft":
        y = np.fft.ifft(np.conj(np.fft.fft(gen)) * np.fft.fft(x, axis=-1), axis=-1)
        return y.real
    raise ValueError(f"unknown method {method!r}")


def circulant_matrix(gen) -> np.ndarray:
    gen = np.asarray(gen, dtype=float)
    N = gen.size
    idx = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
    return gen[idx]


def elongation(q, sq: LocalSquareRoot) -> np.ndarray:
    """Generalized elongations ``r = T q``, i.e. ``r_j = sum_s tau_s q_{j+s}``."""
    q = np.asarray(q, dtype=float)
    _check_size(q.shape[-1], sq.m)
    r = np.zeros_like(q)
    for s, t in enumerate(sq.tau):
        r += t * np.roll(q, -s, axis=-1)
    return r


def factorization_residual(sq: LocalSquareRoot, c: CouplingVector, N: int) -> float:
    """``max |T^T T - A|`` for the dense ``N x N`` circulants."""
    _check_size(N, max(sq.m, c.m))
    T = circulant_matrix(sq.generator(N))
    A = circulant_matrix(expand_generator(interaction_generator(c).a, N, symmetric=True))
    return float(np.max(np.abs(T.T @ T - A)))


def random_coupling(m: int, rng: np.random.Generator, low: float = 0.05, high: float = 1.0) -> CouplingVector:
    """Couplings drawn uniformly from ``[low, high]`` (end couplings strictly positive)."""
    return CouplingVector(tuple(rng.uniform(low, high, size=m)))
