"""Gibbs sampling, exact harmonic flow, anharmonic integration and Monte Carlo correlations.

Fourier convention: ``Q = fft(q)/sqrt(N)`` and ``P = fft(p)/sqrt(N)``.  Mode ``l``
of the interaction matrix has eigenvalue ``|omega_l|^2`` with
``omega_l = omega(l/N)``, so the harmonic flow is

    Q(t) = Q cos(|omega| t) + P sin(|omega| t)/|omega|,
    P(t) = P cos(|omega| t) - |omega| Q sin(|omega| t).

``P`` equals the complex conjugate of the momentum variable ``p_hat`` used in the
theory (``p_hat = sqrt(N) ifft(p)``), so these are the same equations.

Arrays may carry a leading replica axis: ``p``, ``q`` of shape ``(M, N)``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np

from .circulant import CouplingVector, LocalSquareRoot, elongation, localized_square_root
from .correlations import worker_count
from .dataset import CorrelationDataset
from .dispersion import omega_eval
from .errors import BlowUp, DimensionMismatch, InsufficientSamples

__all__ = [
    "ChainModel",
    "NonlinearModel",
    "ChainState",
    "EnsembleSpec",
    "splitmix64",
    "replica_rng",
    "gibbs_sample",
    "harmonic_propagate",
    "nonlinear_force",
    "nonlinear_energy",
    "energy_density",
    "integrate",
    "mc_correlations",
    "BLOWUP_LIMIT",
]

BLOWUP_LIMIT = 1e6
MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ChainModel:
    coupling: CouplingVector
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    @cached_property
    def sq(self) -> LocalSquareRoot:
        return localized_square_root(self.coupling)

    @property
    def m(self) -> int:
        return self.coupling.m


@dataclass(frozen=True)
class NonlinearModel:
    """Chain with pair potential ``kappa_s (x^2/2 + chi x^3/3 + gamma x^4/4)``, ``x = q_j - q_{j+s}``."""

    base: ChainModel
    chi: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def harmonic(self) -> bool:
        return self.chi == 0 and self.gamma == 0


def _as_nonlinear(model) -> NonlinearModel:
    if isinstance(model, NonlinearModel):
        return model
    if isinstance(model, ChainModel):
        return NonlinearModel(model)
    if isinstance(model, CouplingVector):
        return NonlinearModel(ChainModel(model))
    raise TypeError(f"expected a chain model, got {type(model).__name__}")


@dataclass
class ChainState:
    """Positions and momenta on the reduced phase space, with elongations ``r = T q``."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    time: float = 0.0

    @classmethod
    def from_pq(cls, p, q, sq: LocalSquareRoot, time: float = 0.0) -> "ChainState":
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.shape != q.shape:
            raise DimensionMismatch(f"p shape {p.shape} != q shape {q.shape}")
        return cls(p, q, elongation(q, sq), float(time))

    @property
    def N(self) -> int:
        return self.p.shape[-1]

    def constraint_residual(self) -> float:
        return float(max(np.max(np.abs(self.p.sum(-1))), np.max(np.abs(self.q.sum(-1)))))


@dataclass(frozen=True)
class EnsembleSpec:
    replicas: int
    seed: int
    N: int
    beta: float
    dt: float
    t_snapshots: tuple
    observables: tuple = ((1, 1),)
    j_values: tuple = (0,)
    block_size: int = 64
    propagator: str = "auto"  # auto | exact | verlet | yoshida4

    def __post_init__(self):
        if self.N % 2 == 0:
            raise DimensionMismatch(f"N must be odd, got {self.N}")
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        if not self.beta > 0 or not self.dt > 0:
            raise ValueError("beta and dt must be positive")
        for t in self.t_snapshots:
            n = t / self.dt
            if t < 0 or abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ValueError(f"snapshot {t} is not a nonnegative multiple of dt={self.dt}")
        if self.propagator not in ("auto", "exact", "verlet", "yoshida4"):
            raise ValueError(f"unknown propagator {self.propagator!r}")


# random streams -----------------------------------------------------------------

def splitmix64(x: int) -> int:
    """SplitMix64 finalizer, used to spread the user seed over 64 bits."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Counter-based stream for one replica: Philox keyed by ``(splitmix64(seed), replica)``."""
    key = np.array([splitmix64(int(seed) & MASK64), int(replica) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# harmonic part --------------------------------------------------------------------

def _mode_frequencies(N: int, sq: LocalSquareRoot) -> np.ndarray:
    f = np.abs(omega_eval(np.arange(N) / N, sq))
    f[0] = 0.0
    return f


def _sample_modes(N: int, beta: float, f: np.ndarray, rng: np.random.Generator):
    h = (N - 1) // 2
    z = rng.standard_normal(4 * h)
    s = np.sqrt(0.5 / beta)
    P = np.zeros(N, dtype=complex)
    Q = np.zeros(N, dtype=complex)
    P[1:h + 1] = s * (z[:h] + 1j * z[h:2 * h])
    Q[1:h + 1] = s * (z[2 * h:3 * h] + 1j * z[3 * h:]) / f[1:h + 1]
    P[h + 1:] = np.conj(P[1:h + 1][::-1])
    Q[h + 1:] = np.conj(Q[1:h + 1][::-1])
    return P, Q


def gibbs_sample(model, N: int, beta: float | None = None, rng: np.random.Generator | None = None,
                 size: int | None = None) -> ChainState:
    """Draw from the harmonic Gibbs measure on the reduced phase space.

    For anharmonic models only the harmonic part of the energy is used.
    ``size`` draws a batch of shape ``(size, N)`` from the same stream.
    """
    nm = _as_nonlinear(model)
    sq = nm.base.sq
    beta = nm.base.beta if beta is None else float(beta)
    if N % 2 == 0 or N <= 2 * sq.m:
        raise DimensionMismatch(f"N must be odd and > 2m = {2 * sq.m}, got {N}")
    rng = rng if rng is not None else np.random.default_rng()
    f = _mode_frequencies(N, sq)
    count = 1 if size is None else int(size)
    Ps, Qs = [], []
    for _ in range(count):
        P, Q = _sample_modes(N, beta, f, rng)
        Ps.append(P)
        Qs.append(Q)
    P, Q = np.array(Ps), np.array(Qs)
    sN = np.sqrt(N)
    p = np.fft.ifft(P, axis=-1).real * sN
    q = np.fft.ifft(Q, axis=-1).real * sN
    if size is None:
        p, q = p[0], q[0]
    return ChainState.from_pq(p, q, sq)


def harmonic_propagate(state: ChainState, t: float, sq: LocalSquareRoot) -> ChainState:
    """Exact harmonic flow over time ``t``; mode 0 is kept at zero."""
    N = state.N
    f = _mode_frequencies(N, sq)[: N // 2 + 1]
    Q = np.fft.rfft(state.q, axis=-1)
    P = np.fft.rfft(state.p, axis=-1)
    c, s = np.cos(f * t), np.sin(f * t)
    finv = np.zeros_like(f)
    finv[1:] = 1.0 / f[1:]
    Qt = Q * c + P * (s * finv)
    Pt = P * c - Q * (f * s)
    Qt[..., 0] = 0.0
    Pt[..., 0] = 0.0
    q = np.fft.irfft(Qt, n=N, axis=-1)
    p = np.fft.irfft(Pt, n=N, axis=-1)
    return ChainState.from_pq(p, q, sq, state.time + t)


# anharmonic part --------------------------------------------------------------------

def nonlinear_force(q, model) -> np.ndarray:
    """``F_j = -dH/dq_j`` for the anharmonic pair potential.

    With ``d = q_{j+s} - q_j`` the potential of a bond is
    ``kappa_s (d^2/2 - chi d^3/3 + gamma d^4/4)`` and
    ``F_j = sum_s kappa_s [V'(d_{j,s}) - V'(d_{j-s,s})]`` with
    ``V'(d) = d - chi d^2 + gamma d^3``.
    """
    nm = _as_nonlinear(model)
    q = np.asarray(q, dtype=float)
    F = np.zeros_like(q)
    for s, k in enumerate(nm.base.coupling.kappa, start=1):
        d = np.roll(q, -s, axis=-1) - q
        v = d - nm.chi * d**2 + nm.gamma * d**3
        F += k * (v - np.roll(v, s, axis=-1))
    return F


def nonlinear_energy(p, q, model) -> np.ndarray:
    """Total energy ``sum p^2/2 + sum_s kappa_s sum_j V(q_j - q_{j+s})``."""
    nm = _as_nonlinear(model)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    H = 0.5 * np.sum(p**2, axis=-1)
    for s, k in enumerate(nm.base.coupling.kappa, start=1):
        x = q - np.roll(q, -s, axis=-1)
        H = H + k * np.sum(0.5 * x**2 + nm.chi * x**3 / 3 + nm.gamma * x**4 / 4, axis=-1)
    return H


def energy_density(state: ChainState, model) -> np.ndarray:
    """``e_j = p_j^2/2 + r_j^2/2`` plus the anharmonic bond energy attached to site ``j``."""
    nm = _as_nonlinear(model)
    e = 0.5 * (state.p**2 + state.r**2)
    if not nm.harmonic:
        for s, k in enumerate(nm.base.coupling.kappa, start=1):
            x = state.q - np.roll(state.q, -s, axis=-1)
            x2 = x * x
            e = e + k * x2 * (nm.chi / 3 * x + nm.gamma / 4 * x2)
    return e


@numba.njit(cache=True, nogil=True, fastmath=False)
def _force_row(q, kappa, chi, gamma, out, v):
    # bond terms v_j = kappa_s V'(q_{j+s} - q_j); F_j = sum_s v_j - v_{j-s}
    N = q.size
    for j in range(N):
        out[j] = 0.0
    for s in range(1, kappa.size + 1):
        k = kappa[s - 1]
        for j in range(N - s):
            d = q[j + s] - q[j]
            v[j] = k * (d + d * d * (gamma * d - chi))
        for j in range(N - s, N):
            d = q[j + s - N] - q[j]
            v[j] = k * (d + d * d * (gamma * d - chi))
        for j in range(s):
            out[j] += v[j] - v[j + N - s]
        for j in range(s, N):
            out[j] += v[j] - v[j - s]


@numba.njit(cache=True, nogil=True)
def _verlet_kernel(q, p, kappa, chi, gamma, dt, steps, weights, limit, alive):
    # one step = velocity-Verlet substeps of length w * dt for w in weights
    M, N = q.shape
    F = np.empty(N)
    buf = np.empty(N)
    for i in range(M):
        qi = q[i]
        pi = p[i]
        _force_row(qi, kappa, chi, gamma, F, buf)
        for _ in range(steps):
            for w in weights:
                h = w * dt
                for j in range(N):
                    pi[j] += 0.5 * h * F[j]
                    qi[j] += h * pi[j]
                _force_row(qi, kappa, chi, gamma, F, buf)
                for j in range(N):
                    pi[j] += 0.5 * h * F[j]
        for j in range(N):
            if not (abs(qi[j]) <= limit):
                alive[i] = False
                break


_CBRT2 = 2.0 ** (1.0 / 3.0)
SCHEMES = {
    "verlet": np.array([1.0]),
    # Yoshida's fourth-order symmetric composition of three Verlet substeps
    "yoshida4": np.array([1.0, -_CBRT2, 1.0]) / (2.0 - _CBRT2),
}


def _verlet_inplace(q, p, nm: NonlinearModel, dt: float, steps: int, scheme: str = "verlet") -> np.ndarray:
    try:
        weights = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}") from None
    alive = np.ones(q.shape[0], dtype=np.bool_)
    if steps > 0:
        _verlet_kernel(q, p, nm.base.coupling.as_array(), float(nm.chi), float(nm.gamma), float(dt),
                       int(steps), weights, BLOWUP_LIMIT, alive)
    return alive


def integrate(state: ChainState, model, dt: float, steps: int, record_every: int = 1,
              scheme: str = "verlet") -> list[ChainState]:
    """Symplectic trajectory, recorded every ``record_every`` steps (including t=0).

    ``scheme`` is ``verlet`` (second order) or ``yoshida4`` (fourth order, three
    force evaluations per step).
    """
    nm = _as_nonlinear(model)
    sq = nm.base.sq
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    batched = state.q.ndim == 2
    q = np.array(state.q, dtype=float, ndmin=2, copy=True)
    p = np.array(state.p, dtype=float, ndmin=2, copy=True)
    traj = [state]
    done = 0
    while done < steps:
        n = min(record_every, steps - done)
        alive = _verlet_inplace(q, p, nm, dt, n, scheme)
        done += n
        if not np.all(alive):
            raise BlowUp(f"|q| exceeded {BLOWUP_LIMIT:g} at t = {state.time + done * dt:.6g}")
        qq, pp = (q.copy(), p.copy()) if batched else (q[0].copy(), p[0].copy())
        traj.append(ChainState.from_pq(pp, qq, sq, state.time + done * dt))
    return traj


# Monte Carlo ------------------------------------------------------------------------------

def _fields(state: ChainState, nm: NonlinearModel, which=(1, 2, 3)) -> dict:
    out = {1: state.r, 2: state.p}
    if 3 in which:
        out[3] = energy_density(state, nm)
    return out


class _Moments:
    """Streaming sums for the delta-method standard error of ``E[X] - E[a] E[b]``."""

    names = ("X", "a", "b", "XX", "aa", "bb", "Xa", "Xb", "ab")

    def __init__(self, shape):
        self.n = 0
        self.s = {k: np.zeros(shape) for k in self.names}

    def add(self, X, a, b):
        # X: (M, J); a, b: (M,)
        a = a[:, None]
        b = b[:, None]
        self.n += X.shape[0]
        s = self.s
        s["X"] += X.sum(0)
        s["a"] += a.sum(0)
        s["b"] += b.sum(0)
        s["XX"] += (X * X).sum(0)
        s["aa"] += (a * a).sum(0)
        s["bb"] += (b * b).sum(0)
        s["Xa"] += (X * a).sum(0)
        s["Xb"] += (X * b).sum(0)
        s["ab"] += (a * b).sum(0)

    def merge(self, other: "_Moments"):
        self.n += other.n
        for k in self.names:
            self.s[k] += other.s[k]

    def estimate(self):
        n = self.n
        if n < 2:
            raise InsufficientSamples("need at least two completed replicas")
        m = {k: v / n for k, v in self.s.items()}
        mx, ma, mb = m["X"], m["a"], m["b"]
        est = mx - ma * mb

        def cov(u, v, mu, mv):
            return (m[u + v] - mu * mv) * n / (n - 1)

        var = (
            cov("X", "X", mx, mx)
            + mb**2 * cov("a", "a", ma, ma)
            + ma**2 * cov("b", "b", mb, mb)
            - 2 * mb * cov("X", "a", mx, ma)
            - 2 * ma * cov("X", "b", mx, mb)
            + 2 * ma * mb * cov("a", "b", ma, mb)
        )
        return est, np.sqrt(np.maximum(var, 0.0) / n)


def _scheme(spec: EnsembleSpec) -> str:
    return "yoshida4" if spec.propagator == "yoshida4" else "verlet"


def _run_block(block: int, spec: EnsembleSpec, nm: NonlinearModel, exact: bool):
    N = spec.N
    sq = nm.base.sq
    f = _mode_frequencies(N, sq)
    lo = block * spec.block_size
    hi = min(spec.replicas, lo + spec.block_size)
    Ps, Qs = [], []
    for rep in range(lo, hi):
        P, Q = _sample_modes(N, spec.beta, f, replica_rng(spec.seed, rep))
        Ps.append(P)
        Qs.append(Q)
    sN = np.sqrt(N)
    p = np.fft.ifft(np.array(Ps), axis=-1).real * sN
    q = np.fft.ifft(np.array(Qs), axis=-1).real * sN
    state0 = ChainState.from_pq(p, q, sq)
    left = {a for a, _ in spec.observables}
    right = {b for _, b in spec.observables}
    u0 = _fields(state0, nm, right)
    u0_hat = {b: np.conj(np.fft.rfft(u0[b], axis=-1)) for b in right}
    jidx = np.mod(np.asarray(spec.j_values, dtype=int), N)
    nj = jidx.size
    moments = {(pair, t): _Moments(nj) for pair in spec.observables for t in spec.t_snapshots}
    alive = np.ones(hi - lo, dtype=bool)
    results = {}
    times = sorted(set(float(t) for t in spec.t_snapshots))
    cur_t = 0.0
    qc, pc = q.copy(), p.copy()
    for t in times:
        if exact:
            st = harmonic_propagate(state0, t, sq)
        else:
            steps = int(round((t - cur_t) / spec.dt))
            alive &= _verlet_inplace(qc, pc, nm, spec.dt, steps, _scheme(spec))
            cur_t = t
            st = ChainState.from_pq(pc, qc, sq, t)
        ut = _fields(st, nm, left)
        ut_hat = {a: np.fft.rfft(ut[a], axis=-1) for a in left}
        for (a, b) in spec.observables:
            # site-origin average: X(j) = (1/N) sum_x u_a(x+j, t) u_b(x, 0)
            X = np.fft.irfft(ut_hat[a] * u0_hat[b], n=N, axis=-1)[:, jidx] / N
            results[((a, b), t)] = (X, ut[a].mean(-1), u0[b].mean(-1))
    keep = alive & np.all(np.isfinite(qc), axis=-1)
    for key, (X, ma, mb) in results.items():
        moments[key].add(X[keep], ma[keep], mb[keep])
    return moments, int((~keep).sum())


def mc_correlations(spec: EnsembleSpec, model) -> CorrelationDataset:
    """Ensemble estimate of ``S_{aa'}(j, t)`` with standard errors.

    Replicas are processed in fixed blocks of ``spec.block_size``; each block is
    a pure function of ``(seed, block index)`` and partial sums are reduced in
    block order, so the output does not depend on the number of workers.
    """
    nm = _as_nonlinear(model)
    nm = NonlinearModel(ChainModel(nm.base.coupling, spec.beta), nm.chi, nm.gamma)
    sq = nm.base.sq
    if spec.N <= 2 * sq.m:
        raise DimensionMismatch(f"N must exceed 2m = {2 * sq.m}")
    fmax = float(np.max(_mode_frequencies(spec.N, sq)))
    exact = spec.propagator == "exact" or (spec.propagator == "auto" and nm.harmonic)
    if exact and not nm.harmonic:
        raise ValueError("the exact propagator only applies to the harmonic chain")
    # the longest substep sets the stability limit
    h = spec.dt * float(np.max(np.abs(SCHEMES[_scheme(spec)])))
    if not exact and h * fmax > 0.5:
        raise ValueError(f"dt * max f = {h * fmax:.3g} exceeds the stability margin 0.5")
    n_blocks = -(-spec.replicas // spec.block_size)
    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        parts = list(ex.map(lambda b: _run_block(b, spec, nm, exact), range(n_blocks)))
    total = None
    aborted = 0
    for mom, nab in parts:
        aborted += nab
        if total is None:
            total = mom
        else:
            for k in total:
                total[k].merge(mom[k])
    if aborted > 0.001 * spec.replicas:
        raise BlowUp(f"{aborted} of {spec.replicas} replicas blew up (more than 0.1%)")
    ds = CorrelationDataset(meta={"aborted_replicas": aborted, "replicas": spec.replicas})
    for (a, b) in spec.observables:
        for t in spec.t_snapshots:
            est, se = total[((a, b), t)].estimate()
            for jj, v, e in zip(spec.j_values, est, se):
                ds.add(a, b, int(jj), float(t), float(v), float(e), "mc")
    return ds
