import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from twophoton import oracle
from twophoton.coeffs import bath_coeffs, mode_coeffs
from twophoton.measurement import (
    Homodyne, MomentSet, PhotonCounting, continuum_moments, decoupling_fourth_moment, homodyne_stats,
    measure, moments, photon_stats, stationary_moments, wick_fourth_moment,
)
from twophoton.params import BathSpec, InputState, SystemParams, VACUUM
from twophoton.spectral import spectral_sums_closed

# frozen Fock-space evolution (truncation 60) of vacuum under pure squeezing, lam = t = 1
FOCK_SQUEEZE_MEAN = 1.3810977777816722
FOCK_SQUEEZE_VAR = 6.577050198638343


def _fock_evolve(omega, lam, alpha, t, dim):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    ad = a.conj().T
    H = omega * ad @ a + 0.5j * lam * (ad @ ad - a @ a)
    # coherent state by displacing the vacuum
    D = expm(alpha * ad - np.conj(alpha) * a)
    psi = expm(-1j * H * t) @ D[:, 0]
    return psi, a, ad


def _expect(psi, op):
    return complex(np.vdot(psi, op @ psi))


def test_fock_squeezing_regression():
    psi, a, ad = _fock_evolve(0.0, 1.0, 0.0, 1.0, 60)
    n = ad @ a
    mean = _expect(psi, n).real
    var = _expect(psi, n @ n).real - mean**2
    assert mean == pytest.approx(FOCK_SQUEEZE_MEAN, rel=1e-12)
    assert var == pytest.approx(FOCK_SQUEEZE_VAR, rel=1e-12)


def test_pure_squeezing_statistics():
    p = SystemParams(0.0, 1.0, 0.0, lossless=True)
    st_ = photon_stats(moments(mode_coeffs(p, 1.0), None, VACUUM))
    sh, ch = math.sinh(1), math.cosh(1)
    assert st_.mean == pytest.approx(sh**2, rel=1e-14)
    assert st_.variance == pytest.approx(2 * sh**2 * ch**2, rel=1e-14)
    assert st_.mean == pytest.approx(FOCK_SQUEEZE_MEAN, rel=1e-6)
    assert st_.variance == pytest.approx(FOCK_SQUEEZE_VAR, rel=1e-5)


@pytest.mark.parametrize("omega, lam, alpha, t", [
    (0.3, 0.6, 0.5, 1.2),
    (1.0, 0.4, 1.1, 2.0),
    (0.5, 0.9, -0.7, 0.8),
])
def test_lossless_statistics_match_fock_space(omega, lam, alpha, t):
    psi, a, ad = _fock_evolve(omega, lam, alpha, t, 90)
    n = ad @ a
    p = SystemParams(omega, lam, 0.0, lossless=True)
    m = moments(mode_coeffs(p, t), None, InputState(alpha))
    ph = photon_stats(m)
    mean = _expect(psi, n).real
    assert ph.mean == pytest.approx(mean, rel=1e-9)
    assert ph.variance == pytest.approx(_expect(psi, n @ n).real - mean**2, rel=1e-8)
    for theta in (0.0, 0.7, math.pi / 2):
        x = 0.5 * (np.exp(-1j * theta) * ad + np.exp(1j * theta) * a)
        hm = homodyne_stats(m, theta)
        xm = _expect(psi, x).real
        assert hm.mean == pytest.approx(xm, abs=1e-10)
        assert hm.variance == pytest.approx(_expect(psi, x @ x).real - xm**2, rel=1e-9)


def test_vacuum_homodyne_noise():
    st_ = homodyne_stats(MomentSet(0.0, 0j, 0.0, 0j), 0.3)
    assert st_.mean == 0 and st_.variance == 0.25


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.1, 2.0), st.floats(0.0, 10.0),
       st.floats(0.0, math.pi))
def test_uncertainty_product(omega, lam, gamma, t, theta):
    p = SystemParams(omega, lam, gamma)
    m = continuum_moments(p, t, InputState(1.0))
    vx = homodyne_stats(m, theta).variance
    vp = homodyne_stats(m, theta + math.pi / 2).variance
    assert vx * vp >= 1 / 16 - 1e-12 * max(1.0, vx * vp)


@given(st.floats(-3, 3))
def test_homodyne_period_is_pi(theta):
    m = MomentSet(1.0, 0.3 - 0.8j, 0.4, 0.2 + 0.1j)
    a, b = homodyne_stats(m, theta), homodyne_stats(m, theta + math.pi)
    assert b.mean == pytest.approx(-a.mean, abs=1e-12)
    assert b.variance == pytest.approx(a.variance, rel=1e-12)


def test_measure_dispatch():
    m = MomentSet(1.0, 1 + 0j, 0.1, 0.05j)
    assert measure(m, PhotonCounting()) == photon_stats(m)
    assert measure(m, Homodyne(0.2)) == homodyne_stats(m, 0.2)


ORDERINGS = [("ad", "a", "ad", "a"), ("ad", "ad", "a", "a"), ("a", "ad", "ad", "a"), ("a", "a", "ad", "ad")]


@given(st.floats(0, 5), st.complex_numbers(max_magnitude=3))
def test_decoupling_exact_for_zero_mean(n, mc):
    m = MomentSet(0.0, 0j, n, mc)
    for ops in ORDERINGS:
        assert wick_fourth_moment(m, ops) == decoupling_fourth_moment(m, ops)


def test_photon_variance_routes_agree():
    m = MomentSet(1.0, 2.0 - 1.5j, 0.8, 0.3 + 0.4j)
    assert photon_stats(m, "wick").variance == pytest.approx(photon_stats(m, "decoupling").variance, rel=1e-12)
    with pytest.raises(ValueError):
        photon_stats(m, "other")


def test_wick_normal_ordered_number_squared():
    # <a^dag a^dag a a> for a coherent state is |alpha|^4
    m = MomentSet(0.0, 1.5 - 0.5j, 0.0, 0j)
    assert wick_fourth_moment(m, ("ad", "ad", "a", "a")) == pytest.approx(abs(1.5 - 0.5j) ** 4)


def test_long_time_photon_number_approaches_stationary_sum():
    p = SystemParams(1.0, 0.5, 1.0)
    target = spectral_sums_closed(p).sum_nu2
    cont = continuum_moments(p, 30.0, VACUUM)
    assert cont.n_noise == pytest.approx(target, rel=1e-9)
    bath = BathSpec.around(p, mode_count=8000).widened(4)
    disc = moments(mode_coeffs(p, 30.0), bath_coeffs(p, bath, 30.0), VACUUM)
    assert disc.n_noise == pytest.approx(target, rel=0.01)
    assert stationary_moments(p).n_noise == target


def test_closed_and_oracle_moments_agree():
    p = SystemParams(1.0, 0.8, 1.0)
    bath = BathSpec.around(p, mode_count=16000, width=640.0)
    t = 2.0
    state = InputState(1.5)
    closed = moments(mode_coeffs(p, t), bath_coeffs(p, bath, t), state)
    mc, bc = oracle.extract_reduced(oracle.propagate(p, bath, t))
    exact = moments(mc, bc, state)
    for det in (PhotonCounting(), Homodyne(0.0), Homodyne(1.1)):
        a, b = measure(closed, det), measure(exact, det)
        assert a.mean == pytest.approx(b.mean, rel=0.01, abs=1e-3)
        assert a.variance == pytest.approx(b.variance, rel=0.01)


def test_moment_time_mismatch_rejected():
    p = SystemParams(1.0, 0.5, 1.0)
    bath = BathSpec.around(p, mode_count=10)
    with pytest.raises(ValueError):
        moments(mode_coeffs(p, 1.0), bath_coeffs(p, bath, 2.0), VACUUM)
