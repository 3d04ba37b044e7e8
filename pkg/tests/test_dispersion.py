import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice_corr.circulant import CouplingVector, localized_square_root, random_coupling
from lattice_corr.dispersion import (
    SERIES_CUTOFF,
    airy_constants,
    concavity_check,
    degenerate_family_half,
    degenerate_family_interior,
    dispersion_jet,
    find_degenerate_points,
    frequency,
    frequency_derivatives,
    omega_eval,
    stationary_points,
    theta,
)
from lattice_corr.errors import InfeasibleFamily, NotFound

EX1 = CouplingVector.preset("example1")
EX2 = CouplingVector.preset("example2")
NN = CouplingVector.preset("nn")

couplings = st.integers(1, 5).flatmap(
    lambda m: st.lists(st.floats(0.05, 2.0), min_size=m, max_size=m)
).map(lambda k: CouplingVector(tuple(k)))


def _mp_f(kappa, k):
    return mpmath.sqrt(2 * sum(kk * (1 - mpmath.cos(2 * mpmath.pi * s * k)) for s, kk in enumerate(kappa, 1)))


def test_omega_examples(rng):
    sq = localized_square_root(NN)
    assert omega_eval(0.0, sq) == 0
    assert omega_eval(0.5, sq) == pytest.approx(-2.0, abs=1e-14)
    for _ in range(50):
        c = random_coupling(int(rng.integers(1, 6)), rng)
        sq = localized_square_root(c)
        k = rng.uniform()
        s = np.arange(1, c.m + 1)
        g = 2 * np.sum(c.as_array() * (1 - np.cos(2 * np.pi * s * k)))
        assert abs(omega_eval(k, sq)) ** 2 == pytest.approx(g, abs=1e-12)


def test_nearest_neighbour_values():
    sq = localized_square_root(NN)
    jet = dispersion_jet(0.25, NN, sq)
    assert jet.f == pytest.approx(np.sqrt(2), abs=1e-13)
    assert jet.d1 == pytest.approx(np.pi * np.sqrt(2), abs=1e-12)
    assert dispersion_jet(0.0, NN, sq).theta == pytest.approx(np.pi / 2, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(couplings)
def test_endpoint_derivatives(c):
    ac = airy_constants(c)
    d = frequency_derivatives(0.0, c)
    assert d[0] == 0
    assert d[1] == pytest.approx(2 * np.pi * ac.v0, rel=1e-12)
    assert abs(d[2]) <= 1e-10
    assert d[3] == pytest.approx(-2 * np.pi**3 / ac.v0 * c.moment(4), rel=1e-9)


def test_example2_derivatives():
    d = frequency_derivatives(1.0 / 3.0, EX2)
    assert abs(d[2]) <= 1e-9
    assert abs(d[3]) <= 1e-9
    # independent oracle: 30-digit numerical differentiation
    mpmath.mp.dps = 30
    kappa = [mpmath.mpf(1), mpmath.mpf(1) / 8, mpmath.mpf(7) / 72]
    d4 = mpmath.diff(lambda k: _mp_f(kappa, k), mpmath.mpf(1) / 3, 4)
    assert d[4] == pytest.approx(float(d4), rel=1e-9)
    assert d[4] == pytest.approx(-(68 * np.sqrt(6) / 3) * np.pi**4, rel=1e-9)


def test_airy_constants_examples():
    ac = airy_constants(NN)
    assert (ac.v0, ac.lambda0) == (pytest.approx(1.0), pytest.approx(0.5))
    assert airy_constants(EX2).v0 == pytest.approx(np.sqrt(2.375), abs=1e-12)
    assert airy_constants(EX2).v0 == pytest.approx(1.54110, abs=1e-5)
    for scale in (0.5, 3.0):
        sc = CouplingVector(tuple(scale**2 * k for k in EX2.kappa))
        assert airy_constants(sc).v0 == pytest.approx(scale * airy_constants(EX2).v0, rel=1e-13)
        assert airy_constants(sc).lambda0 == pytest.approx(scale ** (1 / 3) * airy_constants(EX2).lambda0, rel=1e-13)


def test_symmetries(rng):
    for _ in range(1000):
        c = random_coupling(int(rng.integers(1, 6)), rng)
        k = rng.uniform()
        assert abs(frequency(1 - k, c) - frequency(k, c)) <= 1e-12
    for _ in range(40):
        c = random_coupling(int(rng.integers(1, 6)), rng)
        sq = localized_square_root(c)
        k = rng.uniform(size=25)
        np.testing.assert_allclose(omega_eval(1 - k, sq), np.conj(omega_eval(k, sq)), atol=1e-12)
        s = theta(1 - k, sq) + theta(k, sq)
        np.testing.assert_allclose(np.angle(np.exp(1j * s)), 0.0, atol=1e-9)


def test_velocity_bound(rng):
    k = np.linspace(1e-4, 1 - 1e-4, 4001)
    for _ in range(20):
        c = random_coupling(int(rng.integers(1, 6)), rng)
        assert np.all(np.abs(frequency_derivatives(k, c)[1]) < 2 * np.pi * airy_constants(c).v0)


def test_derivatives_vs_finite_differences(rng):
    h = 1e-4
    for _ in range(20):
        c = random_coupling(int(rng.integers(1, 5)), rng)
        k = rng.uniform(0.05, 0.45)
        d = frequency_derivatives(k, c)
        # five-point central stencils; higher orders differentiate the lower ones
        g = lambda n, i: frequency_derivatives(k + n * h, c)[i]  # noqa: E731
        for i in range(4):
            fd = (g(-2, i) - 8 * g(-1, i) + 8 * g(1, i) - g(2, i)) / (12 * h)
            scale = (2 * np.pi) ** (i + 1) * airy_constants(c).v0
            assert abs(fd - d[i + 1]) <= 1e-6 * max(abs(d[i + 1]), 1e-3 * scale)


def test_sinc_and_cosine_forms_agree(rng):
    for _ in range(20):
        c = random_coupling(int(rng.integers(1, 6)), rng)
        k = rng.uniform(1e-6, 1 - 1e-6, size=50)
        s = np.arange(1, c.m + 1)
        direct = np.sqrt(2 * np.sum(c.as_array() * (1 - np.cos(2 * np.pi * np.multiply.outer(k, s))), axis=-1))
        kk = np.minimum(k, 1 - k)
        sinc = 2 * np.pi * kk * np.sqrt(np.sum(s**2 * c.as_array() * np.sinc(np.multiply.outer(kk, s)) ** 2, -1))
        np.testing.assert_allclose(frequency(k, c), direct, atol=1e-12)
        np.testing.assert_allclose(frequency(k, c), sinc, atol=1e-12)


def test_series_region_is_smooth():
    # derivatives are continuous across the switch to the endpoint series
    a = frequency_derivatives(SERIES_CUTOFF * (1 - 1e-9), EX2)
    b = frequency_derivatives(SERIES_CUTOFF * (1 + 1e-9), EX2)
    np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-9)


def test_stationary_points_nn():
    sq = localized_square_root(NN)
    pts = stationary_points(NN, sq, 0.0)
    assert [p.k for p in pts] == [pytest.approx(0.5, abs=1e-12)]
    for xi in (0.1, 0.5, 0.9):
        plus = [p for p in stationary_points(NN, sq, xi) if p.branch == 1]
        assert len(plus) == 1
        assert np.cos(np.pi * plus[0].k) == pytest.approx(xi, abs=1e-10)
    assert stationary_points(NN, sq, 1.0001) == []


def test_stationary_points_example2_degenerate():
    sq = localized_square_root(EX2)
    pts = stationary_points(EX2, sq, np.sqrt(2) / 4)
    deg = [p for p in pts if abs(p.k - 1 / 3) < 1e-6]
    assert deg and deg[0].order == 2


def test_degenerate_family_half():
    fam = degenerate_family_half([1.0])
    assert fam.coupling.kappa == pytest.approx((1.0, 0.25))
    assert fam.quartic_nondegenerate
    assert abs(dispersion_jet(0.5, fam.coupling, localized_square_root(fam.coupling)).d2) <= 1e-9
    for m in (3, 5, 7):
        fam = degenerate_family_half([1.0 / s for s in range(1, m)])
        assert fam.coupling.kappa[-1] == pytest.approx((m - 1) / (2 * m**2), rel=1e-13)
    with pytest.raises(InfeasibleFamily):
        degenerate_family_half([1.0, 0.1])  # m = 3: kappa_3 = -(1 - 0.4)/9 < 0


def test_degenerate_family_interior():
    pt = degenerate_family_interior(EX2, 0.3)
    assert pt.kstar == pytest.approx(1 / 3, abs=1e-9)
    assert pt.vstar == pytest.approx(np.sqrt(2) / 4, abs=1e-9)
    assert pt.coupling.kappa[2] == pytest.approx(7 / 72, abs=1e-9)
    assert pt.order == 2
    assert pt.sign == -1
    assert pt.lambdastar == pytest.approx((68 * np.sqrt(6) / 3 * np.pi**4 / 24) ** 0.25 / (2 * np.pi), rel=1e-8)
    with pytest.raises(NotFound):
        degenerate_family_interior(NN, 0.2)
    # a perturbed start converges back onto the family
    pert = CouplingVector((1.0, 0.125, 0.09))
    pt2 = degenerate_family_interior(pert, 0.3)
    assert 0 < pt2.vstar < airy_constants(pt2.coupling).v0


def test_find_degenerate_points():
    pts = find_degenerate_points(EX2)
    assert len(pts) == 1 and pts[0].kstar == pytest.approx(1 / 3, abs=1e-9)
    half = find_degenerate_points(EX1)
    assert len(half) == 1 and half[0].kstar == 0.5
    assert half[0].lambdastar == pytest.approx(0.5, rel=1e-10)
    assert find_degenerate_points(NN) == []


def test_concavity():
    assert concavity_check(NN)
    assert not concavity_check(EX1)
    assert concavity_check(CouplingVector((1.0, 1e-4)))
