"""Dispersion relation of the chain and its stationary-phase geometry.

With ``tau`` the generator of the localized square root,

    omega(k) = sum_s tau_s exp(2 pi i s k),        f(k) = |omega(k)|,

and ``f(k)**2 = g(k) = 2 sum_s kappa_s (1 - cos 2 pi s k)``.  The frequency
``f`` has an odd smooth extension through ``k = 0`` and satisfies
``f(1 - k) = f(k)``; derivatives are obtained from the closed-form derivatives of
``g`` away from the endpoints and from a Taylor series of ``f(k) = k sqrt(G(k^2))``
close to them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .circulant import CouplingVector, LocalSquareRoot
from .errors import InfeasibleFamily, NotFound

__all__ = [
    "DispersionJet",
    "AiryConstants",
    "DegeneratePoint",
    "StationaryPoint",
    "HalfFamily",
    "omega_eval",
    "frequency",
    "frequency_derivatives",
    "theta",
    "dispersion_jet",
    "airy_constants",
    "stationary_points",
    "degenerate_family_half",
    "degenerate_family_interior",
    "find_degenerate_points",
    "degenerate_point_at",
    "concavity_check",
]

SERIES_CUTOFF = 0.03
SERIES_TERMS = 20
THETA_STEP = 5e-4


@dataclass(frozen=True)
class DispersionJet:
    k: float
    f: float
    d1: float
    d2: float
    d3: float
    d4: float
    theta: float


@dataclass(frozen=True)
class AiryConstants:
    v0: float
    lambda0: float


@dataclass(frozen=True)
class DegeneratePoint:
    """Stationary point where ``f''`` (and possibly ``f'''``) vanishes."""

    kstar: float
    vstar: float
    lambdastar: float
    sign: int
    order: int
    coupling: CouplingVector


@dataclass(frozen=True)
class StationaryPoint:
    k: float
    branch: int  # +1: f'(k) = 2 pi xi, -1: f'(k) = -2 pi xi
    order: int  # number of vanishing derivatives beyond f'


@dataclass(frozen=True)
class HalfFamily:
    coupling: CouplingVector
    quartic_sum: float

    @property
    def quartic_nondegenerate(self) -> bool:
        return abs(self.quartic_sum) > 1e-12 * max(1.0, self.coupling.moment(4))


def omega_eval(k, sq: LocalSquareRoot):
    """``omega(k) = -sum tau_s (1 - cos 2 pi s k) + i sum tau_s sin 2 pi s k``."""
    k = np.asarray(k, dtype=float)
    tau = sq.as_array()
    s = np.arange(tau.size)
    ph = 2.0 * np.pi * np.multiply.outer(k, s)
    # sum(tau) = 0, so the constant part drops and 1 - cos is the stable form
    re = -np.sum(tau * 2.0 * np.sin(0.5 * ph) ** 2, axis=-1)
    im = np.sum(tau * np.sin(ph), axis=-1)
    out = re + 1j * im
    return out if out.ndim else complex(out)


def _g_derivatives(k: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    s = np.arange(1, kappa.size + 1, dtype=float)
    w = 2.0 * np.pi * s
    ph = np.multiply.outer(k, w)
    sn, cs = np.sin(ph), np.cos(ph)
    hs = np.sin(0.5 * ph) ** 2
    g0 = 4.0 * np.sum(kappa * hs, axis=-1)
    g1 = 2.0 * np.sum(kappa * w * sn, axis=-1)
    g2 = 2.0 * np.sum(kappa * w**2 * cs, axis=-1)
    g3 = -2.0 * np.sum(kappa * w**3 * sn, axis=-1)
    g4 = -2.0 * np.sum(kappa * w**4 * cs, axis=-1)
    return np.stack([g0, g1, g2, g3, g4])


@lru_cache(maxsize=256)
def _series_coefficients(kappa: tuple) -> np.ndarray:
    """Coefficients ``c_n`` of ``f(k) = sum_n c_n k^(2n+1)`` near ``k = 0``."""
    kap = np.asarray(kappa)
    s = np.arange(1, kap.size + 1, dtype=float)
    # G(u) = g(k)/k^2 with u = k^2
    G = np.array(
        [
            2.0 * (-1) ** n * np.sum(kap * (2 * np.pi * s) ** (2 * n + 2)) / factorial(2 * n + 2)
            for n in range(SERIES_TERMS)
        ]
    )
    h = np.zeros(SERIES_TERMS)
    h[0] = np.sqrt(G[0])
    for n in range(1, SERIES_TERMS):
        h[n] = (G[n] - np.dot(h[1:n], h[n - 1:0:-1])) / (2.0 * h[0])
    return h


def _series_derivatives(k: np.ndarray, kappa: tuple) -> np.ndarray:
    h = _series_coefficients(kappa)
    powers = 2 * np.arange(SERIES_TERMS) + 1
    out = np.zeros((5,) + k.shape)
    for n in range(5):
        coef = h * np.array([np.prod(np.arange(p - n + 1, p + 1)) for p in powers], dtype=float)
        e = powers - n
        mask = e >= 0
        out[n] = np.sum(coef[mask] * np.power.outer(k, e[mask].astype(float)), axis=-1)
    return out


def frequency_derivatives(k, c: CouplingVector) -> np.ndarray:
    """Array ``[f, f', f'', f''', f'''']`` at ``k`` (shape ``(5,) + k.shape``)."""
    k = np.asarray(k, dtype=float)
    mirror = k > 0.5
    kk = np.where(mirror, 1.0 - k, k)
    out = np.empty((5,) + k.shape)
    small = kk < SERIES_CUTOFF
    if np.any(small):
        out[:, small] = _series_derivatives(kk[small], c.kappa)
    big = ~small
    if np.any(big):
        g = _g_derivatives(kk[big], c.as_array())
        f = np.sqrt(g[0])
        f1 = g[1] / (2 * f)
        f2 = (g[2] - 2 * f1**2) / (2 * f)
        f3 = (g[3] - 6 * f1 * f2) / (2 * f)
        f4 = (g[4] - 6 * f2**2 - 8 * f1 * f3) / (2 * f)
        out[:, big] = np.stack([f, f1, f2, f3, f4])
    # f^(n)(k) = (-1)^n f^(n)(1 - k)
    out[1] = np.where(mirror, -out[1], out[1])
    out[3] = np.where(mirror, -out[3], out[3])
    return out


def frequency(k, c: CouplingVector):
    """``f(k) = sqrt(2 sum kappa_s (1 - cos 2 pi s k))``."""
    return frequency_derivatives(k, c)[0]


@lru_cache(maxsize=64)
def _theta_grid(tau: tuple) -> tuple[np.ndarray, np.ndarray]:
    sq = LocalSquareRoot(tau)
    n = int(np.ceil(1.0 / THETA_STEP))
    k = np.linspace(0.0, 1.0, n + 1)
    w = omega_eval(k[1:-1], sq)
    # omega ~ 2 pi i v0 k near 0, so the principal branch starts at pi/2
    ang = np.unwrap(np.angle(w))
    th = np.concatenate([[0.5 * np.pi], ang, [ang[-1]]])
    return k, th


def theta(k, sq: LocalSquareRoot):
    """Continuous branch of ``arg omega(k)`` on ``[0, 1]`` with ``theta(0) = pi/2``."""
    k = np.asarray(k, dtype=float)
    grid, th = _theta_grid(sq.tau)
    idx = np.clip(np.rint(k / (grid[1] - grid[0])).astype(int), 1, grid.size - 2)
    w = omega_eval(k, sq)
    base = th[idx]
    delta = np.angle(np.asarray(w) * np.exp(-1j * base))
    out = np.where(np.abs(w) > 0, base + delta, np.where(k < 0.5, 0.5 * np.pi, th[-1]))
    return out if out.ndim else float(out)


def dispersion_jet(k: float, c: CouplingVector, sq: LocalSquareRoot) -> DispersionJet:
    d = frequency_derivatives(float(k), c)
    return DispersionJet(float(k), *(float(x) for x in d), theta=float(theta(float(k), sq)))


def airy_constants(c: CouplingVector) -> AiryConstants:
    v0 = np.sqrt(c.moment(2))
    lam = 0.5 * (c.moment(4) / v0) ** (1.0 / 3.0)
    return AiryConstants(float(v0), float(lam))


def _deriv_tol(c: CouplingVector) -> float:
    return 1e-8 * (2 * np.pi) ** 2 * np.sqrt(c.moment(2))


def _classify(k: float, c: CouplingVector) -> int:
    d = frequency_derivatives(k, c)
    tol = _deriv_tol(c)
    order = 0
    for n in (2, 3):
        if abs(d[n]) <= tol * (2 * np.pi) ** (n - 2):
            order += 1
        else:
            break
    return order


def stationary_points(c: CouplingVector, sq: LocalSquareRoot, xi: float) -> list[StationaryPoint]:
    """Solutions ``k`` in ``(0, 1/2]`` of ``f'(k) = +-2 pi xi``."""
    v0 = airy_constants(c).v0
    if abs(xi) > v0:
        return []
    n_cells = 4 * c.m * 64
    grid = np.linspace(0.0, 0.5, n_cells + 1)[1:]
    grid = np.concatenate([[0.5 * grid[0] * 1e-3], grid])
    d = frequency_derivatives(grid, c)
    fp, fpp = d[1], d[2]
    tol = 1e-9 * 2 * np.pi * v0
    found: list[StationaryPoint] = []
    branches = (1,) if xi == 0 else (1, -1)

    def fprime(x):
        return float(frequency_derivatives(x, c)[1])

    def fsecond(x):
        return float(frequency_derivatives(x, c)[2])

    for b in branches:
        target = 2 * np.pi * xi * b
        h = fp - target
        roots = []
        for i in range(grid.size - 1):
            if h[i] == 0.0:
                roots.append(grid[i])
            elif h[i] * h[i + 1] < 0:
                roots.append(brentq(lambda x: fprime(x) - target, grid[i], grid[i + 1], xtol=1e-15))
            # tangential roots sit at zeros of f''
            if fpp[i] * fpp[i + 1] < 0:
                x2 = brentq(fsecond, grid[i], grid[i + 1], xtol=1e-15)
                if abs(fprime(x2) - target) <= tol:
                    roots.append(x2)
        if abs(h[-1]) <= tol:
            roots.append(0.5)
        for r in sorted(roots):
            if r <= 0:
                continue
            if found and any(abs(r - p.k) < 1e-9 and p.branch == b for p in found):
                continue
            found.append(StationaryPoint(float(r), b, _classify(r, c)))
    return found


def degenerate_family_half(kappa_partial) -> HalfFamily:
    """Complete ``kappa_1..kappa_{m-1}`` so that ``f''(1/2) = 0``."""
    kp = np.atleast_1d(np.asarray(kappa_partial, dtype=float))
    m = kp.size + 1
    s = np.arange(1, m, dtype=float)
    km = (-1.0) ** m / m**2 * np.sum(s**2 * (-1.0) ** (s + 1) * kp)
    if not km > 0:
        raise InfeasibleFamily(f"kappa_m = {km:.6g} is not positive for kappa = {tuple(kp)}")
    full = np.concatenate([kp, [km]])
    sf = np.arange(1, m + 1, dtype=float)
    q = float(np.sum(sf**4 * (-1.0) ** (sf + 1) * full))
    return HalfFamily(CouplingVector(tuple(full)), q)


def degenerate_point_at(k: float, c: CouplingVector) -> DegeneratePoint:
    d = frequency_derivatives(k, c)
    lam = (abs(d[4]) / 24.0) ** 0.25 / (2 * np.pi)
    return DegeneratePoint(
        kstar=float(k),
        vstar=float(d[1] / (2 * np.pi)),
        lambdastar=float(lam),
        sign=int(np.sign(d[4])) or 1,
        order=_classify(k, c),
        coupling=c,
    )


def degenerate_family_interior(c: CouplingVector, k_seed: float, tol: float = 1e-11,
                               max_iter: int = 100) -> DegeneratePoint:
    """Solve ``f''(k) = f'''(k) = 0`` for ``k`` and one coupling by Newton's method.

    The adjusted coupling is ``kappa_3`` for ``m = 3`` and ``kappa_4`` for ``m >= 4``.
    """
    if c.m < 3:
        raise NotFound(f"no interior degenerate point can be tuned for m = {c.m}")
    if not 0 < k_seed < 0.5:
        raise NotFound(f"seed {k_seed} outside (0, 1/2)")
    ia = 2 if c.m == 3 else 3
    kap = c.as_array().copy()

    def F(k, ka):
        kk = kap.copy()
        kk[ia] = ka
        d = frequency_derivatives(k, CouplingVector(tuple(kk)))
        return np.array([d[2], d[3]]), d

    k, ka = float(k_seed), float(kap[ia])
    for _ in range(max_iter):
        r, d = F(k, ka)
        scale = np.array([1.0, 2 * np.pi])
        if np.all(np.abs(r) <= tol * scale * (2 * np.pi) ** 2):
            break
        h = 1e-6 * max(ka, 1e-3)
        rp, _ = F(k, ka + h)
        rm, _ = F(k, ka - h)
        J = np.column_stack([[d[3], d[4]], (rp - rm) / (2 * h)])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NotFound("singular Jacobian") from None
        k += step[0]
        ka += step[1]
        if not 0 < k < 0.5:
            raise NotFound(f"iterate k = {k:.6g} left (0, 1/2)")
        if ka <= 0:
            raise NotFound(f"adjusted coupling became non-positive ({ka:.3g})")
    else:
        raise NotFound(f"no convergence after {max_iter} iterations")
    kap[ia] = ka
    cc = CouplingVector(tuple(kap))
    pt = degenerate_point_at(k, cc)
    v0 = airy_constants(cc).v0
    if not 0 < pt.vstar < v0:
        raise NotFound(f"v* = {pt.vstar:.6g} outside (0, v0)")
    return pt


def find_degenerate_points(c: CouplingVector) -> list[DegeneratePoint]:
    """Points of ``(0, 1/2]`` where ``f''`` and ``f'''`` vanish together."""
    n = 4 * c.m * 256
    grid = np.linspace(0.0, 0.5, n + 1)[1:]
    d = frequency_derivatives(grid, c)
    tol = _deriv_tol(c)
    pts = []
    for i in range(grid.size - 1):
        if d[3, i] * d[3, i + 1] < 0:
            k = brentq(lambda x: float(frequency_derivatives(x, c)[3]), grid[i], grid[i + 1], xtol=1e-15)
            if abs(frequency_derivatives(k, c)[2]) <= tol:
                pts.append(degenerate_point_at(k, c))
    # f''' vanishes at 1/2 by symmetry
    if abs(d[2, -1]) <= tol:
        pts.append(degenerate_point_at(0.5, c))
    return pts


def concavity_check(c: CouplingVector) -> bool:
    """True iff ``f'' < -tol`` on ``(0, 1/2]``."""
    tol = 1e-12 * (2 * np.pi) ** 2 * airy_constants(c).v0
    grid = np.linspace(0.0, 0.5, 4096 + 1)[1:]
    f2 = frequency_derivatives(grid, c)[2]
    if np.max(f2) >= -tol:
        return False
    # refine interior local maxima of f''
    for i in range(1, grid.size - 1):
        if f2[i] >= f2[i - 1] and f2[i] >= f2[i + 1]:
            res = minimize_scalar(
                lambda x: -float(frequency_derivatives(x, c)[2]),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if -res.fun >= -tol:
                return False
    return True
