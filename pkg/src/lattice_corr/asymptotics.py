"""Airy and Pearcey functions and the large-time parametrices of the correlations.

Generic (concave) dispersion produces an Airy profile of width ``t^(1/3)`` around
the sound peaks ``j = +-v0 t``.  A degenerate stationary point ``k*`` with
``f'' = f''' = 0`` produces a Pearcey profile of width ``t^(1/4)`` moving with
``v* = f'(k*)/(2 pi)``; for ``k* = 1/2`` the peak sits at ``j = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import airy

from ._quad import panel_rule
from .circulant import CouplingVector, LocalSquareRoot
from .dispersion import DegeneratePoint, airy_constants, frequency, theta
from .errors import DomainError, RegimeError

__all__ = [
    "airy_fn",
    "pearcey_fn",
    "airy_parametrix",
    "airy_parametrix_block",
    "pearcey_parametrix",
    "pearcey_parametrix_block",
    "ParametrixRequest",
    "PEARCEY_WINDOW",
]

AIRY_RANGE = 40.0
PEARCEY_RANGE = 100.0
PEARCEY_WINDOW = 50.0
ROTATED_CUTOFF = 10.0
_E8 = np.exp(1j * np.pi / 8)


@dataclass(frozen=True)
class ParametrixRequest:
    alpha: int
    alphaprime: int
    j: int
    t: float
    regime: str  # airy | pearcey_interior | pearcey_half
    point: DegeneratePoint | None = None

    def __post_init__(self):
        if self.regime not in ("airy", "pearcey_interior", "pearcey_half"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime != "airy" and self.point is None:
            raise ValueError("Pearcey regimes need a degenerate point")
        if self.regime == "pearcey_half" and self.point is not None and abs(self.point.kstar - 0.5) > 1e-9:
            raise ValueError("pearcey_half requires k* = 1/2")


def airy_fn(x):
    """Airy function ``Ai(x)`` for ``x`` in ``[-40, 40]``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > AIRY_RANGE) or not np.all(np.isfinite(x)):
        raise DomainError(f"airy_fn is supported on [-{AIRY_RANGE}, {AIRY_RANGE}]")
    out = airy(x)[0]
    return out if out.ndim else float(out)


@lru_cache(maxsize=4)
def _rotated_rule(T: float = 6.0, n: int = 512):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * T * (x + 1.0), 0.5 * T * w


def _pearcey_rotated(a: np.ndarray) -> np.ndarray:
    s, w = _rotated_rule()
    integrand = np.exp(-s**4) * np.cos(np.multiply.outer(a, _E8 * s))
    return 2.0 * _E8 * (integrand @ w)


def _pearcey_contour(a: float) -> complex:
    """Real segment ``[-R, R]`` plus the two rays ``+-(R + e^{i pi/8} s)``.

    Along both rays ``Im(y^4) >= 4 R^3 s sin(pi/8)``, which dominates the
    ``|a| s sin(pi/8)`` growth of ``exp(i a y)`` once ``4 R^3 > |a|``.
    """
    R = max(1.0, (abs(a) / 2.0) ** (1.0 / 3.0))
    n_seg = int(np.ceil(8 * (R**4 + abs(a) * R) / np.pi)) + 8
    y, w = panel_rule(n_seg, -R, R)
    seg = np.sum(w * np.exp(1j * (y**4 + a * y)))
    # ray decay: s^4 alone gives exp(-s^4); 6 is ample
    smax = 6.0
    n_ray = int(np.ceil(8 * ((R + smax) ** 4) / np.pi / 4)) + 16
    s, ws = panel_rule(n_ray, 0.0, smax)
    y1 = R + _E8 * s
    y2 = -R - _E8 * s
    rays = _E8 * np.sum(ws * (np.exp(1j * (y1**4 + a * y1)) + np.exp(1j * (y2**4 + a * y2))))
    return complex(seg + rays)


def pearcey_fn(sign: int, a):
    """Pearcey integral ``P_+-(a) = int exp(i(+-y^4 + a y)) dy`` for real ``|a| <= 100``."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    a = np.asarray(a, dtype=float)
    if np.any(np.abs(a) > PEARCEY_RANGE) or not np.all(np.isfinite(a)):
        raise DomainError(f"pearcey_fn is supported on |a| <= {PEARCEY_RANGE}")
    flat = np.atleast_1d(a).ravel()
    out = np.empty(flat.size, dtype=complex)
    small = np.abs(flat) <= ROTATED_CUTOFF
    if np.any(small):
        out[small] = _pearcey_rotated(flat[small])
    for i in np.flatnonzero(~small):
        out[i] = _pearcey_contour(float(flat[i]))
    if sign == -1:
        out = np.conj(out)
    out = out.reshape(a.shape)
    return out if out.ndim else complex(out)


def airy_parametrix_block(j, t: float, c: CouplingVector, beta: float) -> dict:
    """Airy approximations for all correlation pairs at integer sites ``j``."""
    if t <= 0:
        raise RegimeError(f"Airy parametrix needs t > 0, got {t}")
    ac = airy_constants(c)
    j = np.asarray(j, dtype=float)
    scale = ac.lambda0 * t ** (1.0 / 3.0)
    a1 = airy((j - ac.v0 * t) / scale)[0]
    a2 = airy(-(j + ac.v0 * t) / scale)[0]
    pre = 1.0 / (2.0 * beta * scale)
    s11 = pre * (a1 + a2)
    s12 = pre * (a2 - a1)
    s33 = (a1**2 + a2**2) / (2.0 * beta**2 * scale**2)
    return {(1, 1): s11, (2, 2): s11.copy(), (1, 2): s12, (2, 1): s12.copy(), (3, 3): s33}


def airy_parametrix(idx, c: CouplingVector, sq: LocalSquareRoot, beta: float) -> float:
    if (idx.alpha == 3) != (idx.alphaprime == 3):
        return 0.0
    return float(airy_parametrix_block([idx.j], idx.t, c, beta)[(idx.alpha, idx.alphaprime)][0])


def _window_arg(point: DegeneratePoint, j: np.ndarray, t: float) -> np.ndarray:
    if point.kstar == 0.5:
        return j / (point.lambdastar * t**0.25)
    # j < 0 uses the mirrored peak at -v* t
    return (point.vstar * t - np.abs(j)) / (point.lambdastar * t**0.25)


def pearcey_parametrix_block(j, t: float, point: DegeneratePoint, c: CouplingVector, sq: LocalSquareRoot,
                             beta: float) -> dict:
    """Pearcey contribution of a degenerate stationary point, for integer sites ``j``."""
    if t <= 0:
        raise RegimeError(f"Pearcey parametrix needs t > 0, got {t}")
    j = np.atleast_1d(np.asarray(j, dtype=float))
    arg = _window_arg(point, j, t)
    if np.any(np.abs(arg) > PEARCEY_WINDOW):
        raise RegimeError(
            f"scaled distance {np.max(np.abs(arg)):.3g} exceeds the parametrix window {PEARCEY_WINDOW}"
        )
    sign = point.sign
    P = pearcey_fn(sign, arg)
    amp = 1.0 / (2.0 * beta * np.pi * point.lambdastar * t**0.25)
    ks = point.kstar
    if ks == 0.5:
        f_half = float(frequency(0.5, c))
        z = np.where(np.mod(j, 2) == 0, 1.0, -1.0) * np.exp(1j * t * f_half) * P
        odd_sum = float(np.sum(sq.as_array()[1::2]))
        sg = np.sign(odd_sum) or 1.0
        s11 = amp * z.real
        s12 = -sg * amp * z.imag
        s33 = np.abs(P) ** 2 / (4.0 * beta**2 * np.pi**2 * point.lambdastar**2 * np.sqrt(t))
        return {(1, 1): s11, (2, 2): s11.copy(), (1, 2): s12, (2, 1): s12.copy(), (3, 3): s33}
    fk = float(frequency(ks, c))
    th = float(theta(ks, sq))
    # j >= 0: phi_-, theta; j < 0: phi_+, -theta (phi_+(k, j/t) = f + 2 pi k j/t)
    tphi = t * fk - 2.0 * np.pi * ks * np.abs(j)
    th_eff = np.where(j >= 0, th, -th)
    base = np.exp(1j * tphi) * P
    s11 = amp * base.real
    s12 = amp * (base * np.exp(-1j * th_eff)).imag
    s21 = -amp * (base * np.exp(1j * th_eff)).imag
    s33 = 0.5 * (2 * s11**2 + s12**2 + s21**2)
    return {(1, 1): s11, (2, 2): s11.copy(), (1, 2): s12, (2, 1): s21, (3, 3): s33}


def pearcey_parametrix(idx, point: DegeneratePoint, c: CouplingVector, sq: LocalSquareRoot, beta: float) -> float:
    if (idx.alpha == 3) != (idx.alphaprime == 3):
        return 0.0
    blk = pearcey_parametrix_block([idx.j], idx.t, point, c, sq, beta)
    return float(blk[(idx.alpha, idx.alphaprime)][0])
